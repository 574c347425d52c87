//! Evaluation manifests: which mesh pairs to score, with optional MOS.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One reference/distorted pair to score.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub ref_mesh: String,
    pub ref_tex: String,
    pub dist_mesh: String,
    pub dist_tex: String,
    pub mos: Option<f64>,
    /// Optional content-class label for per-class breakdowns.
    pub class: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

const REQUIRED_COLUMNS: [&str; 4] = ["ref_mesh", "ref_tex", "dist_mesh", "dist_tex"];

/// Parse a manifest CSV with header `ref_mesh,ref_tex,dist_mesh,dist_tex[,mos][,class]`.
pub fn read_manifest(text: &str) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Manifest(format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut required = [0usize; 4];
    for (slot, name) in required.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = col(name).ok_or_else(|| Error::Manifest(format!("missing column `{name}`")))?;
    }
    let mos_col = col("mos");
    let class_col = col("class");

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| Error::ManifestRow {
            row: row_no,
            msg: e.to_string(),
        })?;
        let field = |i: usize| -> Result<String> {
            let value = record.get(i).unwrap_or("").to_string();
            if value.is_empty() {
                return Err(Error::ManifestRow {
                    row: row_no,
                    msg: format!("empty `{}` path", REQUIRED_COLUMNS[required.iter().position(|&c| c == i).unwrap()]),
                });
            }
            Ok(value)
        };
        let mos = match mos_col.and_then(|i| record.get(i)) {
            None | Some("") => None,
            Some(raw) => {
                let value: f64 = raw.parse().map_err(|_| Error::ManifestRow {
                    row: row_no,
                    msg: format!("non-numeric MOS `{raw}`"),
                })?;
                if !value.is_finite() {
                    return Err(Error::ManifestRow {
                        row: row_no,
                        msg: format!("non-finite MOS `{raw}`"),
                    });
                }
                Some(value)
            }
        };
        let class = class_col
            .and_then(|i| record.get(i))
            .filter(|s| !s.is_empty())
            .map(String::from);
        rows.push(ManifestRow {
            ref_mesh: field(required[0])?,
            ref_tex: field(required[1])?,
            dist_mesh: field(required[2])?,
            dist_tex: field(required[3])?,
            mos,
            class,
        });
    }

    Ok(Manifest { rows })
}

pub fn read_manifest_file(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_manifest(&text)
}

/// One scored manifest row, as emitted by the batch scorer.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredRow {
    pub ref_mesh: String,
    pub ref_tex: String,
    pub dist_mesh: String,
    pub dist_tex: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mos: Option<f64>,
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Render scored rows as `...,score` CSV text.
pub fn write_scores_csv(rows: &[ScoredRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["ref_mesh", "ref_tex", "dist_mesh", "dist_tex", "mos", "score"])
        .unwrap();
    for row in rows {
        writer
            .write_record([
                row.ref_mesh.as_str(),
                row.ref_tex.as_str(),
                row.dist_mesh.as_str(),
                row.dist_tex.as_str(),
                &row.mos.map(|m| m.to_string()).unwrap_or_default(),
                &row.score.map(|s| s.to_string()).unwrap_or_default(),
            ])
            .unwrap();
    }
    String::from_utf8(writer.into_inner().unwrap()).unwrap()
}

/// Render scored rows as the equivalent JSON array.
pub fn write_scores_json(rows: &[ScoredRow]) -> String {
    serde_json::to_string_pretty(rows).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_without_mos_parses() {
        let m = read_manifest("ref_mesh,ref_tex,dist_mesh,dist_tex\na.obj,a.png,b.obj,b.png\n")
            .unwrap();
        assert_eq!(m.rows.len(), 1);
        assert_eq!(m.rows[0].mos, None);
        assert_eq!(m.rows[0].ref_mesh, "a.obj");
    }

    #[test]
    fn numeric_mos_parses() {
        let m = read_manifest(
            "ref_mesh,ref_tex,dist_mesh,dist_tex,mos\na.obj,a.png,b.obj,b.png,4.2\n",
        )
        .unwrap();
        assert_eq!(m.rows[0].mos, Some(4.2));
    }

    #[test]
    fn non_numeric_mos_names_row() {
        let err = read_manifest(
            "ref_mesh,ref_tex,dist_mesh,dist_tex,mos\na.obj,a.png,b.obj,b.png,4.0\nc.obj,c.png,d.obj,d.png,high\n",
        )
        .unwrap_err();
        match err {
            Error::ManifestRow { row, .. } => assert_eq!(row, 2),
            other => panic!("expected ManifestRow, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_an_error() {
        let err = read_manifest("ref_mesh,ref_tex,dist_mesh\na,b,c\n").unwrap_err();
        assert!(matches!(err, Error::Manifest(_)));
    }

    #[test]
    fn class_column_is_optional() {
        let m = read_manifest(
            "ref_mesh,ref_tex,dist_mesh,dist_tex,mos,class\na.obj,a.png,b.obj,b.png,3.5,B\n",
        )
        .unwrap();
        assert_eq!(m.rows[0].class.as_deref(), Some("B"));
    }

    #[test]
    fn scores_round_trip_through_csv() {
        let rows = vec![ScoredRow {
            ref_mesh: "a.obj".into(),
            ref_tex: "a.png".into(),
            dist_mesh: "b.obj".into(),
            dist_tex: "b.png".into(),
            mos: Some(4.0),
            score: Some(0.875),
            error: None,
        }];
        let csv = write_scores_csv(&rows);
        assert!(csv.contains("0.875"));
        let json = write_scores_json(&rows);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed[0]["score"], 0.875);
    }
}
