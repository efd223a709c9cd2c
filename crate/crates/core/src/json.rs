//! Repo-wide JSON encoding of complex matrices: an array of rows, each
//! entry a 2-array `[re, im]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::herm::HermOp;

pub fn matrix_to_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            Value::Array(vec![z.re.into(), z.im.into()])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn herm_to_json(a: &HermOp) -> Value {
    matrix_to_json(a.matrix())
}

pub fn matrix_from_json(v: &Value) -> Result<DMatrix<Complex64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix: expected an array of rows".into()))?;
    let n = rows.len();
    let mut entries = Vec::with_capacity(n * n);
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("matrix row {i}: expected an array")))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!(
                    "matrix row {i}: expected {c} entries, got {}",
                    row.len()
                )))
            }
            _ => {}
        }
        for (j, entry) in row.iter().enumerate() {
            entries.push(complex_from_json(entry).map_err(|_| {
                Error::Parse(format!("matrix entry ({i},{j}): expected [re, im]"))
            })?);
        }
    }
    let ncols = ncols.unwrap_or(0);
    Ok(DMatrix::from_row_slice(n, ncols, &entries))
}

pub fn herm_from_json(v: &Value) -> Result<HermOp> {
    HermOp::new(matrix_from_json(v)?)
}

fn complex_from_json(v: &Value) -> std::result::Result<Complex64, ()> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => Ok(Complex64::new(re.as_f64().ok_or(())?, im.as_f64().ok_or(())?)),
        _ => Err(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::pauli;
    use serde_json::json;

    #[test]
    fn round_trip_pauli_y() {
        let y = pauli(2);
        let v = herm_to_json(&y);
        assert_eq!(v, json!([[[0.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]]]));
        assert_eq!(herm_from_json(&v).unwrap(), y);
    }

    #[test]
    fn malformed_entry_is_reported() {
        let err = matrix_from_json(&json!([[[1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]))
            .unwrap_err();
        assert!(err.to_string().contains("expected [re, im]"), "{err}");
        let err = matrix_from_json(&json!([[1.0, 0.0]])).unwrap_err();
        assert!(err.to_string().contains("expected [re, im]"));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matrix_from_json(&json!([[[1, 0]], [[0, 0], [1, 0]]])).is_err());
    }
}
