//! Density-matrix documents:
//!
//! ```json
//! { "label": "bell", "matrix": [[[0.5, 0], [0, 0], [0, 0], [0.5, 0]], ...] }
//! ```
//!
//! `matrix` holds 4 rows of 4 `[re, im]` pairs; `label` is optional.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matcore::{c, Mat4};

pub type MatrixRows = [[[f64; 2]; 4]; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub matrix: MatrixRows,
}

impl StateDocument {
    pub fn new(label: Option<String>, m: &Mat4) -> Self {
        StateDocument {
            label,
            matrix: matrix_rows(m),
        }
    }

    pub fn to_mat(&self) -> Mat4 {
        Mat4::from_fn(|i, j| c(self.matrix[i][j][0], self.matrix[i][j][1]))
    }
}

pub fn matrix_rows(m: &Mat4) -> MatrixRows {
    std::array::from_fn(|i| std::array::from_fn(|j| [m.0[i][j].re, m.0[i][j].im]))
}

/// Strict parse: wrong shapes, non-numeric or non-finite entries are reported
/// with their row and column.
pub fn parse_state_document(text: &str) -> Result<StateDocument> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Parse("document must be an object".into()))?;
    if let Some(key) = obj.keys().find(|k| *k != "label" && *k != "matrix") {
        return Err(Error::Parse(format!("unexpected field \"{key}\"")));
    }
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(Error::Parse("\"label\" must be a string".into())),
    };
    let rows = obj
        .get("matrix")
        .ok_or_else(|| Error::Parse("missing field \"matrix\"".into()))?
        .as_array()
        .ok_or_else(|| Error::Parse("\"matrix\" must be an array of 4 rows".into()))?;
    if rows.len() != 4 {
        return Err(Error::Parse(format!(
            "\"matrix\" has {} rows, expected 4",
            rows.len()
        )));
    }
    let mut matrix = [[[0.0; 2]; 4]; 4];
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("row {i} is not an array")))?;
        if row.len() != 4 {
            return Err(Error::Parse(format!(
                "row {i} has {} entries, expected 4",
                row.len()
            )));
        }
        for (j, entry) in row.iter().enumerate() {
            let at = || format!("entry at row {i}, column {j}");
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Parse(format!("{} must be a [re, im] pair", at())))?;
            for (k, part) in pair.iter().enumerate() {
                let x = part
                    .as_f64()
                    .ok_or_else(|| Error::Parse(format!("{} is not numeric", at())))?;
                if !x.is_finite() {
                    return Err(Error::Parse(format!("{} is not finite", at())));
                }
                matrix[i][j][k] = x;
            }
        }
    }
    Ok(StateDocument { label, matrix })
}

pub fn write_state_document(doc: &StateDocument) -> String {
    serde_json::to_string_pretty(doc).expect("state documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_with(matrix: &str) -> String {
        format!("{{\"label\": \"x\", \"matrix\": {matrix}}}")
    }

    #[test]
    fn round_trip() {
        let m = Mat4::from_fn(|i, j| c(i as f64 * 0.1, j as f64 * -0.25));
        let doc = StateDocument::new(Some("m".into()), &m);
        let back = parse_state_document(&write_state_document(&doc)).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_mat(), m);
    }

    #[test]
    fn label_is_optional() {
        let rows = "[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]";
        let doc = parse_state_document(&format!("{{\"matrix\": {rows}}}")).unwrap();
        assert_eq!(doc.label, None);
        assert_eq!(doc.matrix[0][0], [1.0, 0.0]);
    }

    #[test]
    fn errors_name_the_location() {
        let bad_row = "[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]";
        let e = parse_state_document(&doc_with(bad_row)).unwrap_err();
        assert_eq!(e, Error::Parse("row 1 has 3 entries, expected 4".into()));

        let bad_entry = "[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,\"x\"],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]";
        let e = parse_state_document(&doc_with(bad_entry)).unwrap_err();
        assert_eq!(
            e,
            Error::Parse("entry at row 2, column 2 is not numeric".into())
        );

        let bad_pair = "[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0]]]";
        let e = parse_state_document(&doc_with(bad_pair)).unwrap_err();
        assert_eq!(
            e,
            Error::Parse("entry at row 3, column 3 must be a [re, im] pair".into())
        );

        assert!(parse_state_document("{\"matrix\": [[1]]}").is_err());
        assert!(parse_state_document("[1, 2]").is_err());
        assert!(parse_state_document("{\"label\": \"x\"}").is_err());
        assert!(parse_state_document("{\"matrix\": []").is_err());
    }

    #[test]
    fn non_finite_numbers_are_rejected() {
        // JSON has no NaN literal; overflowing literals are the way to smuggle one in
        let rows = "[[[1e400,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]";
        assert!(parse_state_document(&doc_with(rows)).is_err());
    }
}
