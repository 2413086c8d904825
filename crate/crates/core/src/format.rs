//! JSON input and output.
//!
//! Systems are objects with keys `"A"`, `"B"`, `"C"`, `"D"`, each a row-major
//! array of rows. An entry is a number or a `[re, im]` pair. An empty `"A"`
//! (`[]`) declares a state-free system; `B` and `C` then default to the empty
//! shapes implied by `D`.
//!
//! Reports are written canonically: object keys sorted, floats with 17
//! significant digits, non-finite values as the strings `"inf"`, `"-inf"`,
//! `"nan"`.

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::brl::StrictCertificate;
use crate::error::{Error, Result};
use crate::kyp::KypReport;
use crate::linalg::{self, CMat, CVec};
use crate::storage::{CertificateKind, StorageCertificate};
use crate::system::StateSpaceSystem;

fn entry(v: &Value, block: &str) -> Result<Complex64> {
    match v {
        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(Error::Parse(format!("{block}: complex entry must be [re, im] numbers"))),
        },
        _ => Err(Error::Parse(format!("{block}: entries must be numbers or [re, im] pairs"))),
    }
}

/// Parses a flat array of numbers and `[re, im]` pairs.
pub fn vector_from_value(v: &Value, name: &str) -> Result<CVec> {
    if !v.is_array() {
        return Err(Error::Parse(format!("{name} must be an array")));
    }
    let row = matrix_from_value(&Value::Array(vec![v.clone()]), name)?;
    Ok(row.row(0).transpose())
}

/// Parses a row-major matrix. `[]` is a matrix with no rows.
pub fn matrix_from_value(v: &Value, block: &str) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{block}: expected an array of rows")))?;
    if rows.is_empty() {
        return Ok(CMat::zeros(0, 0));
    }
    let mut parsed = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("{block}: each row must be an array")))?;
        parsed.push(row.iter().map(|e| entry(e, block)).collect::<Result<Vec<_>>>()?);
    }
    let ncols = parsed[0].len();
    if let Some(bad) = parsed.iter().position(|r| r.len() != ncols) {
        return Err(Error::mismatch(block, format!("{ncols} columns in every row"), format!("row {bad} with {}", parsed[bad].len())));
    }
    Ok(CMat::from_fn(parsed.len(), ncols, |i, j| parsed[i][j]))
}

fn located(e: serde_json::Error) -> Error {
    let (line, column) = (e.line(), e.column());
    let text = e.to_string();
    let msg = text.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&text);
    Error::Parse(format!("line {line}, column {column}: {msg}"))
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(located)
}

pub fn system_from_value(v: &Value) -> Result<StateSpaceSystem> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("system must be a JSON object".into()))?;
    let get = |key: &str| -> Result<CMat> {
        let blk = obj
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing key \"{key}\"")))?;
        matrix_from_value(blk, key)
    };
    let (a, mut b, mut c, d) = (get("A")?, get("B")?, get("C")?, get("D")?);
    let (p, m) = d.shape();
    let n = a.nrows();
    if n == 0 && b.nrows() == 0 {
        b = CMat::zeros(0, m);
    }
    if n == 0 && c.ncols() == 0 {
        c = CMat::zeros(c.nrows().max(p), 0);
    }
    StateSpaceSystem::new(a, b, c, d)
}

pub fn parse_system(text: &str) -> Result<StateSpaceSystem> {
    system_from_value(&parse_json(text)?)
}

pub fn number(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

/// Row-major nested arrays; complex entries become `[re, im]` only when
/// some imaginary part is nonzero.
pub fn matrix_to_value(m: &CMat) -> Value {
    let real = linalg::is_real(m);
    let rows = (0..m.nrows())
        .map(|i| {
            Value::Array(
                (0..m.ncols())
                    .map(|j| {
                        let z = m[(i, j)];
                        if real {
                            number(z.re)
                        } else {
                            Value::Array(vec![number(z.re), number(z.im)])
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in pairs {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub fn system_to_value(sys: &StateSpaceSystem) -> Value {
    object(vec![
        ("A", matrix_to_value(sys.a())),
        ("B", matrix_to_value(sys.b())),
        ("C", matrix_to_value(sys.c())),
        ("D", matrix_to_value(sys.d())),
    ])
}

pub fn certificate_to_value(cert: &StorageCertificate) -> Value {
    object(vec![
        ("kind", serde_json::to_value(cert.kind).expect("enum serializes")),
        ("horizon", Value::from(cert.horizon as u64)),
        ("residual", number(cert.residual)),
        ("converged", Value::from(cert.converged)),
        ("H", matrix_to_value(&cert.h)),
    ])
}

/// Reads either a certificate object (with an `"H"` key) or a bare matrix.
pub fn certificate_from_value(v: &Value) -> Result<StorageCertificate> {
    match v {
        Value::Object(obj) => {
            let h = obj
                .get("H")
                .ok_or_else(|| Error::Parse("certificate object has no \"H\" key".into()))?;
            let h = matrix_from_value(h, "H")?;
            let kind = match obj.get("kind") {
                Some(k) => serde_json::from_value(k.clone()).map_err(|e| Error::Parse(format!("kind: {e}")))?,
                None => CertificateKind::User,
            };
            Ok(StorageCertificate {
                h,
                kind,
                horizon: obj.get("horizon").and_then(Value::as_u64).unwrap_or(0) as usize,
                residual: obj.get("residual").and_then(Value::as_f64).unwrap_or(0.0),
                converged: obj.get("converged").and_then(Value::as_bool).unwrap_or(true),
            })
        }
        _ => StorageCertificate::user(matrix_from_value(v, "H")?),
    }
}

pub fn kyp_report_to_value(r: &KypReport) -> Value {
    object(vec![
        ("flavor", serde_json::to_value(r.flavor).expect("enum serializes")),
        ("feasible", Value::from(r.feasible)),
        ("min_eig", number(r.min_eig)),
        ("margin", number(r.margin)),
    ])
}

pub fn strict_certificate_to_value(c: &StrictCertificate) -> Value {
    object(vec![
        ("epsilon", number(c.epsilon)),
        ("delta", number(c.delta)),
        ("H", matrix_to_value(&c.h)),
        ("augmented", kyp_report_to_value(&c.augmented_report)),
    ])
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(u) = num.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = num.as_i64() {
                out.push_str(&i.to_string());
            } else {
                let x = num.as_f64().expect("json numbers are f64-representable");
                out.push_str(&format!("{x:.16e}"));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push(':');
                write_canonical(&map[*key], out);
            }
            out.push('}');
        }
    }
}

/// Compact canonical JSON.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}
