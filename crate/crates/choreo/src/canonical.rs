//! Deterministic JSON output: object keys sorted, floats rendered with 17
//! significant digits so values round-trip bit-exactly and files diff
//! cleanly across runs and machines.

use serde_json::Value;

use crate::error::{ChoreoError, Result};

/// Renders a JSON value in canonical form, trailing newline included.
pub fn canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

/// Serializes any value through `serde_json::Value` into canonical form.
pub fn to_canonical<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(canonical_string(&v))
}

/// Single-line rendering with the same key order and float format, for
/// JSON-line summaries on standard output.
pub fn compact_string(value: &Value) -> String {
    let mut out = String::new();
    write_compact(&mut out, value);
    out
}

fn write_compact(out: &mut String, value: &Value) {
    match value {
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_compact(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string serialization is total"));
                out.push(':');
                write_compact(out, &map[*key]);
            }
            out.push('}');
        }
        other => write_value(out, other, 0),
    }
}

/// Canonical serialization written to disk.
pub fn write_canonical<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    std::fs::write(path, to_canonical(value)?)?;
    Ok(())
}

/// Parses a canonical (or any) JSON file into a typed value.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses a file into an untyped value, e.g. to sniff its shape.
pub fn read_value(path: &std::path::Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Rejects values JSON cannot carry; `serde_json` already refuses NaN and
/// infinities, so this only guards hand-built `Value`s.
pub fn check_finite(value: &Value) -> Result<()> {
    match value {
        Value::Number(n) => {
            if n.as_f64().map(|x| !x.is_finite()).unwrap_or(false) {
                return Err(ChoreoError::Contract("non-finite number in output".into()));
            }
            Ok(())
        }
        Value::Array(items) => items.iter().try_for_each(check_finite),
        Value::Object(map) => map.values().try_for_each(check_finite),
        _ => Ok(()),
    }
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is total"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent + 1);
                write_value(out, item, indent + 1);
            }
            newline(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("string serialization is total"));
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
            }
            newline(out, indent);
            out.push('}');
        }
    }
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else {
        // 17 significant digits: enough for exact f64 round-trips.
        let x = n.as_f64().expect("number is one of i64/u64/f64");
        out.push_str(&format!("{x:.16e}"));
    }
}

fn newline(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_recursively() {
        let v = json!({"zebra": 1, "alpha": {"inner_z": true, "inner_a": null}});
        let s = canonical_string(&v);
        let a = s.find("\"alpha\"").unwrap();
        let z = s.find("\"zebra\"").unwrap();
        assert!(a < z);
        let ia = s.find("\"inner_a\"").unwrap();
        let iz = s.find("\"inner_z\"").unwrap();
        assert!(ia < iz);
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [
            0.1,
            -0.457_106_781_186_547_6,
            1.0 / 3.0,
            6.02e23,
            5e-324,
            f64::MAX,
            -0.0,
        ] {
            let v = json!({ "x": x });
            let s = canonical_string(&v);
            let back: Value = serde_json::from_str(&s).unwrap();
            let y = back["x"].as_f64().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{x:e} -> {s} -> {y:e}");
        }
    }

    #[test]
    fn integers_stay_integers() {
        let v = json!({"n": 3, "big": u64::MAX, "neg": -7});
        let s = canonical_string(&v);
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains(&format!("\"big\": {}", u64::MAX)));
        assert!(s.contains("\"neg\": -7"));
        assert!(!s.contains("3e"));
    }

    #[test]
    fn reserialization_is_byte_identical() {
        let v = json!({
            "meta": {"seed": 7, "tool_version": "0.1.0"},
            "values": [1.5, -2.25, 0.0, 3],
            "nested": {"b": [true, null], "a": "text with \"quotes\" and \n"}
        });
        let first = canonical_string(&v);
        let parsed: Value = serde_json::from_str(&first).unwrap();
        let second = canonical_string(&parsed);
        assert_eq!(first.into_bytes(), second.into_bytes());
    }

    #[test]
    fn empty_containers_are_compact() {
        let v = json!({"a": [], "b": {}});
        let s = canonical_string(&v);
        assert!(s.contains("\"a\": []"));
        assert!(s.contains("\"b\": {}"));
    }

    #[test]
    fn finite_check_accepts_ordinary_values() {
        let v = json!({"x": [1.0, 2, "three", null, {"y": -0.5}]});
        assert!(check_finite(&v).is_ok());
    }

    #[test]
    fn compact_form_is_one_sorted_line() {
        let v = json!({"z": [1, 2.5], "a": {"k": true}});
        let s = compact_string(&v);
        assert!(!s.contains('\n'));
        assert_eq!(s, "{\"a\":{\"k\":true},\"z\":[1,2.5000000000000000e0]}");
    }
}
