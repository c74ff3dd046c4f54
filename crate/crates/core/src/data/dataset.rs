use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{DatasetSchema, Instance, Value};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub instance: Instance,
    pub positive: bool,
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Vec<Labeled>> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, schema)
}

/// Reads a headed CSV. Extra columns are ignored; every schema feature and
/// the target must be present.
pub fn read_dataset<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Vec<Labeled>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_cols = schema
        .features
        .iter()
        .map(|f| column(&f.name))
        .collect::<Result<Vec<_>>>()?;
    let target_col = column(&schema.target)?;

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |col: usize| {
            record.get(col).ok_or_else(|| Error::Row {
                row,
                message: format!("missing cell in column {}", col + 1),
            })
        };
        let mut instance = Instance::new();
        for (f, &col) in schema.features.iter().zip(&feature_cols) {
            let value = f.parse_cell(cell(col)?).map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?;
            instance.set(&f.name, value);
        }
        let target = cell(target_col)?.trim();
        let positive = if target == schema.positive_label {
            true
        } else if target == schema.negative_label {
            false
        } else {
            return Err(Error::Row {
                row,
                message: format!("target `{target}` is neither positive nor negative label"),
            });
        };
        out.push(Labeled { instance, positive });
    }
    Ok(out)
}

/// Writes rows in the same dialect `read_dataset` accepts.
pub fn write_dataset<W: Write>(writer: W, schema: &DatasetSchema, rows: &[Labeled]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<&str> = schema.names().collect();
    header.push(&schema.target);
    wtr.write_record(&header)?;
    for row in rows {
        let mut cells: Vec<String> = schema
            .ordered(&row.instance)
            .into_iter()
            .map(|v| match v {
                Value::Label(s) => s.clone(),
                Value::Number(x) => format!("{x}"),
            })
            .collect();
        cells.push(if row.positive {
            schema.positive_label.clone()
        } else {
            schema.negative_label.clone()
        });
        wtr.write_record(&cells)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;

    fn schema() -> DatasetSchema {
        DatasetSchema::new(
            vec![
                FeatureSchema::categorical("Occupation", &["Manager", "Service", "Sales, Retail"]),
                FeatureSchema::continuous("Age", 17.0, 90.0, 1.0),
            ],
            "Income",
            ">50K",
            "<=50K",
        )
        .unwrap()
    }

    #[test]
    fn reads_well_formed_rows() {
        let csv = "Occupation,Age,Income\nManager,30,>50K\nService,45,<=50K\n\"Sales, Retail\",22.5,<=50K\n";
        let rows = read_dataset(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].positive);
        assert_eq!(rows[2].instance.get("Occupation"), Some(&Value::from("Sales, Retail")));
        assert_eq!(rows[2].instance.get("Age"), Some(&Value::Number(22.5)));
    }

    #[test]
    fn rejects_unknown_level_with_row_number() {
        let csv = "Occupation,Age,Income\nManager,30,>50K\nPilot,40,>50K\n";
        let err = read_dataset(csv.as_bytes(), &schema()).unwrap_err();
        match err {
            Error::Row { row, message } => {
                assert_eq!(row, 3);
                assert!(message.contains("Pilot"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_column_bad_number_and_range() {
        let err = read_dataset("Occupation,Income\nManager,>50K\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "Age"));
        let err = read_dataset("Occupation,Age,Income\nManager,old,>50K\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }));
        let err = read_dataset("Occupation,Age,Income\nManager,120,>50K\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }));
        let err = read_dataset("Occupation,Age,Income\nManager,20,maybe\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }));
    }
}
