//! Feature tables as CSV: a header of column names and one numeric row per
//! sample, optionally with an integer label column.

use std::path::Path;

use mlrm_core::{FeatureMatrix, LabelVector};

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct TableError {
    pub path: String,
    pub message: String,
}

fn fail(path: &Path, message: impl Into<String>) -> TableError {
    TableError {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Reads a feature table. When `label` names a column it is split off as
/// the label vector.
pub fn read_table(path: &Path, label: Option<&str>) -> Result<(FeatureMatrix, Option<LabelVector>), TableError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(path, e.to_string()))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| fail(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_at = match label {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| fail(path, format!("no column `{name}`")))?,
        ),
        None => None,
    };
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_at)
        .map(|(_, h)| h.clone())
        .collect();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| fail(path, e.to_string()))?;
        for (i, field) in rec.iter().enumerate() {
            let field = field.trim();
            if Some(i) == label_at {
                labels.push(
                    field
                        .parse::<usize>()
                        .map_err(|_| fail(path, format!("row {}: bad label `{field}`", line + 2)))?,
                );
            } else {
                data.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| fail(path, format!("row {}: bad number `{field}`", line + 2)))?,
                );
            }
        }
        rows += 1;
    }
    let x = FeatureMatrix::new(rows, names.len(), data, names).map_err(|e| fail(path, e.to_string()))?;
    let y = match label_at {
        Some(_) => Some(LabelVector::from_labels(labels).map_err(|e| fail(path, e.to_string()))?),
        None => None,
    };
    Ok((x, y))
}

pub fn write_table(path: &Path, x: &FeatureMatrix, y: Option<&LabelVector>) -> Result<(), TableError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| fail(path, e.to_string()))?;
    let mut header: Vec<String> = x.col_names().to_vec();
    if y.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(|e| fail(path, e.to_string()))?;
    for i in 0..x.rows() {
        let mut row: Vec<String> = x.row(i).iter().map(|v| format!("{v}")).collect();
        if let Some(y) = y {
            row.push(y.labels()[i].to_string());
        }
        w.write_record(&row).map_err(|e| fail(path, e.to_string()))?;
    }
    w.flush().map_err(|e| fail(path, e.to_string()))
}
