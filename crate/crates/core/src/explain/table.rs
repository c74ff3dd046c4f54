use serde::{Deserialize, Serialize};

use super::format_percent;
use crate::cfsearch::CounterfactualResult;
use crate::data::Instance;
use crate::model::LogisticModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub attribute: String,
    /// One cell per alternative; `-` where the value is unchanged.
    pub alternatives: Vec<String>,
    pub original: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationTable {
    pub header: Vec<String>,
    /// One row per attribute, in schema order.
    pub rows: Vec<TableRow>,
    pub confidence: TableRow,
    /// Shared by every column.
    pub prediction: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn render_table(
    model: &LogisticModel,
    original: &Instance,
    alternatives: &[CounterfactualResult],
) -> Result<ExplanationTable> {
    let schema = &model.schema;
    schema.check_instance(original)?;
    let first = alternatives
        .first()
        .ok_or_else(|| Error::Render("a table needs at least one alternative".into()))?;
    let class = model.predict_class(original)?;
    let mut warnings = Vec::new();
    for (i, alt) in alternatives.iter().enumerate() {
        if alt.predicted_class != class {
            return Err(Error::Render(format!(
                "alternative {} is predicted `{}`, not `{}`",
                i + 1,
                alt.predicted_label,
                schema.class_label(class)
            )));
        }
        if &alt.x_prime == original {
            warnings.push(format!("alternative {} is identical to the original", i + 1));
        }
    }

    let rows = schema
        .features
        .iter()
        .map(|f| {
            let old = original.get(&f.name).expect("checked instance");
            TableRow {
                attribute: f.name.clone(),
                alternatives: alternatives
                    .iter()
                    .map(|a| match a.x_prime.get(&f.name) {
                        Some(v) if v != old => v.to_string(),
                        _ => "-".to_string(),
                    })
                    .collect(),
                original: old.to_string(),
            }
        })
        .collect();

    let mut header = vec!["Attribute".to_string()];
    header.extend((1..=alternatives.len()).map(|i| format!("Alternative {i}")));
    header.push("Original".to_string());

    Ok(ExplanationTable {
        header,
        rows,
        confidence: TableRow {
            attribute: "Confidence score".into(),
            alternatives: alternatives.iter().map(|a| format_percent(a.confidence)).collect(),
            original: format_percent(model.confidence(original, first.measure)?),
        },
        prediction: schema.class_label(class).to_string(),
        warnings,
    })
}

impl ExplanationTable {
    /// Fixed-width plain text, one line per row, columns separated by `|`.
    pub fn to_text(&self) -> String {
        let cells = |r: &TableRow| -> Vec<String> {
            let mut v = vec![r.attribute.clone()];
            v.extend(r.alternatives.iter().cloned());
            v.push(r.original.clone());
            v
        };
        let body: Vec<Vec<String>> = self.rows.iter().map(cells).collect();
        let conf = cells(&self.confidence);
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in body.iter().chain(std::iter::once(&conf)) {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let first = widths[0].max("AI prediction".len());
        widths[0] = first;

        let line = |row: &[String]| -> String {
            let padded: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            padded.join(" | ").trim_end().to_string()
        };
        let rule = widths
            .iter()
            .map(|&w| "-".repeat(w))
            .collect::<Vec<_>>()
            .join("-+-");

        let mut out = Vec::new();
        out.push(line(&self.header));
        out.push(rule.clone());
        out.extend(body.iter().map(|r| line(r)));
        out.push(rule.clone());
        out.push(line(&conf));
        out.push(rule);
        out.push(line(&["AI prediction".to_string(), self.prediction.clone()]));
        let mut text = out.join("\n");
        text.push('\n');
        text
    }
}
