//! report.json assembly and tolerance-aware comparison.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "dipolekit-report/1";

/// Default relative tolerance for numeric comparison.
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-8;

/// Key suffixes that mark a number's unit.
pub const UNIT_SUFFIXES: [&str; 15] = [
    "_eA", "_eV", "_ns", "_debye", "_debye2", "_ea2", "_nm3", "_angstrom", "_per_s", "_unitless", "_count", "_index",
    "_quanta", "_e", "_s",
];

/// Tolerance for one key: integers compare exactly.
pub fn tolerance_for(key: &str) -> f64 {
    if key.ends_with("_count") || key.ends_with("_index") || key.ends_with("_quanta") {
        0.0
    } else {
        DEFAULT_RELATIVE_TOLERANCE
    }
}

pub fn build(command: &str, inputs: Value, results: Value, warnings: &[String]) -> Value {
    let generated = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "schema": SCHEMA,
        "tool": { "name": "dipolekit", "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "inputs": inputs,
        "results": results,
        "warnings": warnings,
        "metadata": { "generated_unix_s": generated },
    })
}

pub fn write(report: &Value, path: &Path) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text)
}

/// The report with its metadata block removed.
pub fn without_metadata(report: &Value) -> Value {
    let mut r = report.clone();
    if let Value::Object(map) = &mut r {
        map.remove("metadata");
    }
    r
}

/// Differences between two reports outside `metadata`, one line each.
pub fn compare(actual: &Value, expected: &Value) -> Vec<String> {
    let mut out = Vec::new();
    walk("", "", &without_metadata(actual), &without_metadata(expected), &mut out);
    out
}

fn walk(path: &str, key: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for k in keys(x, y) {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match (x.get(&k), y.get(&k)) {
                    (Some(va), Some(vb)) => walk(&p, &k, va, vb, out),
                    (Some(_), None) => out.push(format!("{p}: not in the reference report")),
                    (None, Some(_)) => out.push(format!("{p}: missing from this report")),
                    (None, None) => {}
                }
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                out.push(format!("{path}: length {} vs {}", x.len(), y.len()));
                return;
            }
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                walk(&format!("{path}[{i}]"), key, va, vb, out);
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            let tol = tolerance_for(key);
            let scale = x.abs().max(y.abs());
            if !((x - y).abs() <= tol * scale || x == y) {
                out.push(format!("{path}: {x} vs {y} (relative tolerance {tol:e})"));
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} vs {b}")),
    }
}

fn keys(x: &Map<String, Value>, y: &Map<String, Value>) -> Vec<String> {
    let mut k: Vec<String> = x.keys().chain(y.keys()).cloned().collect();
    k.sort();
    k.dedup();
    k
}

/// Numeric leaves whose key carries no unit suffix.
pub fn unitless_numbers(report: &Value) -> Vec<String> {
    let mut out = Vec::new();
    check_units("", "", report, &mut out);
    out
}

fn check_units(path: &str, key: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                check_units(&p, k, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                check_units(&format!("{path}[{i}]"), key, v, out);
            }
        }
        Value::Number(_) if !UNIT_SUFFIXES.iter().any(|s| key.ends_with(s)) => out.push(path.to_string()),
        _ => {}
    }
}
