use axum::Json;
use serde_json::{json, Value};

fn json_op(summary: &str, request: Option<&str>, ok: &str) -> Value {
    let mut op = json!({
        "summary": summary,
        "responses": {
            "200": { "description": ok, "content": { "application/json": {} } },
            "400": { "$ref": "#/components/responses/Invalid" }
        }
    });
    if let Some(r) = request {
        op["requestBody"] = json!({
            "required": true,
            "content": { "application/json": { "schema": { "$ref": format!("#/components/schemas/{r}") } } }
        });
    }
    op
}

fn infeasible(mut op: Value) -> Value {
    op["responses"]["422"] = json!({
        "description": "no admissible point satisfies the query",
        "content": { "application/json": { "schema": { "$ref": "#/components/schemas/InfeasibleReport" } } }
    });
    op
}

pub fn spec() -> Value {
    let instance_param = json!({ "name": "instance_id", "in": "query", "schema": { "type": "integer", "minimum": 0 } });
    let mut ice_get = json_op("confidence profile of one feature for a dataset row", None, "IceProfile");
    ice_get["parameters"] = json!([
        { "name": "feature", "in": "query", "required": true, "schema": { "type": "string" } },
        { "name": "measure", "in": "query", "schema": { "$ref": "#/components/schemas/Measure" } },
        instance_param
    ]);
    let mut instances = json_op("dataset rows for instance picking", None, "rows with id, x and label");
    instances["parameters"] = json!([
        { "name": "limit", "in": "query", "schema": { "type": "integer", "minimum": 0, "default": 20 } },
        { "name": "offset", "in": "query", "schema": { "type": "integer", "minimum": 0, "default": 0 } }
    ]);
    json!({
        "openapi": "3.0.3",
        "info": { "title": "confex", "version": env!("CARGO_PKG_VERSION") },
        "paths": {
            "/schema": { "get": json_op("dataset schema of the loaded model", None, "schema and digest") },
            "/instances": { "get": instances },
            "/predict": { "post": json_op("probability, label and all four confidence scores", Some("InstanceRef"), "prediction") },
            "/counterfactual": { "post": infeasible(json_op("nearest grid point meeting the confidence threshold", Some("Query"), "CounterfactualResult")) },
            "/ice": {
                "get": ice_get,
                "post": json_op("confidence profile of one feature for an instance", Some("IceRequest"), "IceProfile")
            },
            "/explain": { "post": infeasible(json_op("sentence, table and charts for a query", Some("Query"), "ExplanationBundle")) },
            "/study/generate": { "post": json_op("study questions", Some("StudyConfig"), "questions") },
            "/study/score": { "post": json_op("score an answer sheet", Some("ScoreRequest"), "score and payout") },
            "/openapi.json": { "get": json_op("this document", None, "OpenAPI document") }
        },
        "components": {
            "responses": {
                "Invalid": {
                    "description": "validation failure",
                    "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" } } }
                }
            },
            "schemas": {
                "Error": {
                    "type": "object",
                    "required": ["code", "message"],
                    "properties": {
                        "code": { "type": "string" },
                        "message": { "type": "string" },
                        "field": { "type": "string" }
                    }
                },
                "Measure": { "type": "string", "enum": ["least_confidence", "margin", "ratio", "entropy"] },
                "Instance": {
                    "type": "object",
                    "additionalProperties": { "oneOf": [{ "type": "number" }, { "type": "string" }] }
                },
                "InstanceRef": {
                    "type": "object",
                    "properties": {
                        "x": { "$ref": "#/components/schemas/Instance" },
                        "instance_id": { "type": "integer", "minimum": 0 }
                    }
                },
                "Query": {
                    "type": "object",
                    "required": ["direction"],
                    "properties": {
                        "x": { "$ref": "#/components/schemas/Instance" },
                        "instance_id": { "type": "integer", "minimum": 0 },
                        "threshold": { "type": "number", "minimum": 0, "maximum": 1 },
                        "direction": { "type": "string", "enum": ["increase", "decrease"] },
                        "mutable_features": { "type": "array", "items": { "type": "string" } },
                        "max_changed": { "type": "integer", "minimum": 0, "default": 2 },
                        "epsilon": { "type": "number", "default": 1e-6 },
                        "measure": { "$ref": "#/components/schemas/Measure" },
                        "alternatives": { "type": "integer", "minimum": 1, "default": 2 }
                    }
                },
                "IceRequest": {
                    "type": "object",
                    "required": ["feature"],
                    "properties": {
                        "feature": { "type": "string" },
                        "measure": { "$ref": "#/components/schemas/Measure" },
                        "x": { "$ref": "#/components/schemas/Instance" },
                        "instance_id": { "type": "integer", "minimum": 0 }
                    }
                },
                "StudyConfig": {
                    "type": "object",
                    "properties": {
                        "n": { "type": "integer", "default": 10 },
                        "seed": { "type": "integer", "default": 0 },
                        "condition": { "type": "string", "enum": ["control", "example_based", "visualisation_based"] },
                        "min_gap": { "type": "number", "default": 0.02 },
                        "same_class": { "type": "boolean", "default": true },
                        "measure": { "$ref": "#/components/schemas/Measure" }
                    }
                },
                "ScoreRequest": {
                    "type": "object",
                    "required": ["questions", "sheet"],
                    "properties": {
                        "questions": { "type": "array", "items": { "type": "object" } },
                        "sheet": {
                            "type": "object",
                            "required": ["participant_id", "answers"],
                            "properties": {
                                "participant_id": { "type": "string" },
                                "answers": { "type": "array", "items": { "type": "object" } }
                            }
                        }
                    }
                },
                "InfeasibleReport": {
                    "type": "object",
                    "properties": {
                        "feasible": { "type": "boolean" },
                        "binding_constraint": {
                            "type": "string",
                            "enum": ["no_mutable_features", "threshold_out_of_range", "threshold", "same_class", "class_flip"]
                        },
                        "message": { "type": "string" },
                        "threshold": { "type": "number" },
                        "direction": { "type": "string" },
                        "points_examined": { "type": "integer" }
                    }
                }
            }
        }
    })
}

pub async fn document() -> Json<Value> {
    Json(spec())
}
