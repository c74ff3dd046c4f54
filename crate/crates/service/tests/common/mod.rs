#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use confex_service::{router, ServiceConfig, SessionState};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn app() -> Router {
    let mut config = ServiceConfig::new(data_file("adult_model.json"));
    config.schema_path = Some(data_file("adult_schema.json"));
    config.data_path = Some(data_file("adult_subset.csv"));
    router(Arc::new(SessionState::load(&config).unwrap()))
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

/// A married 63-year-old service worker, predicted below the income line.
pub const SERVICE_WORKER: &str = r#"{"Marital status":"Married","Years of education":9,"Occupation":"Service","Age":63,"Any capital gains":"No","Working hours per week":12,"Education":"High School"}"#;
