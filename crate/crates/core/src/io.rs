//! File formats. Every float is written with 17 significant digits and
//! object keys are emitted in sorted order, so identical inputs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::linalg::CMatrix;

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    let mut out = String::new();
    emit(&value, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

fn format_float(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("cannot serialize {x}")));
    }
    Ok(format!("{x:.16e}"))
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn emit(value: &Value, level: usize, out: &mut String) -> Result<()> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                write!(out, "{n}").unwrap();
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))?);
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s)?),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                // numeric rows stay on one line
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    emit(item, level, out)?;
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    indent(level + 1, out);
                    emit(item, level + 1, out)?;
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                indent(level, out);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&serde_json::to_string(key)?);
                out.push_str(": ");
                emit(&map[*key], level + 1, out)?;
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push('}');
        }
    }
    Ok(())
}

/// `{"dim": N, "re": [[..]..], "im": [[..]..]}` with row-major rows.
pub fn density_matrix_value(rho: &DensityMatrix) -> Value {
    let d = rho.dim();
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| (0..d).map(|j| f(&rho.get(i, j))).collect())
            .collect()
    };
    json!({
        "dim": d,
        "re": rows(|z| z.re),
        "im": rows(|z| z.im),
    })
}

fn read_part(value: &Value, key: &str, dim: usize) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidParameter(format!("density matrix \"{key}\": {msg}"));
    let arr = value
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing array".into()))?;
    let mut flat = Vec::with_capacity(dim * dim);
    // nested rows or one flat row-major array
    if arr.len() == dim && arr.iter().all(Value::is_array) {
        for row in arr {
            let row = row.as_array().unwrap();
            if row.len() != dim {
                return Err(bad(format!("row of length {} (expected {dim})", row.len())));
            }
            for v in row {
                flat.push(v.as_f64().ok_or_else(|| bad("non-numeric entry".into()))?);
            }
        }
    } else if arr.len() == dim * dim {
        for v in arr {
            flat.push(v.as_f64().ok_or_else(|| bad("non-numeric entry".into()))?);
        }
    } else {
        return Err(bad(format!("expected {dim}x{dim} entries")));
    }
    Ok(flat)
}

pub fn density_matrix_from_value(value: &Value) -> Result<DensityMatrix> {
    let dim = value
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidParameter("density matrix needs integer \"dim\"".into()))?
        as usize;
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let re = read_part(value, "re", dim)?;
    let im = read_part(value, "im", dim)?;
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(re[i * dim + j], im[i * dim + j])
    });
    DensityMatrix::new(m)
}

pub fn write_density_matrix(rho: &DensityMatrix, path: &Path) -> Result<()> {
    write_json(&density_matrix_value(rho), path)
}

pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let value: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    density_matrix_from_value(&value)
}
