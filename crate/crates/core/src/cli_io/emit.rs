//! Byte-stable JSON and CSV writers.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), object keys are sorted
//! and non-finite numbers become `null`, so equal inputs give equal bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use super::config::Format;
use super::run::{flatten, ErrorObject, RunOutput};
use crate::error::{QapError, Result};

/// Fixed column order of a spectrum table.
const MODE_COLUMNS: [&str; 5] = ["k", "family", "direction", "omega", "nyquist"];

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_number(n: &serde_json::Number, out: &mut String) {
    if let Some(i) = n.as_i64() {
        let _ = write!(out, "{i}");
    } else if let Some(u) = n.as_u64() {
        let _ = write!(out, "{u}");
    } else {
        out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn write_json(value: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            let scalar = items.iter().all(|v| !v.is_array() && !v.is_object());
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if scalar {
                    if i > 0 {
                        out.push(' ');
                    }
                } else {
                    out.push('\n');
                    out.push_str(&pad(indent + 1));
                }
                write_json(v, indent + 1, out);
            }
            if !scalar {
                out.push('\n');
                out.push_str(&pad(indent));
            }
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push('{');
            let keys: BTreeSet<&String> = map.keys().collect();
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push_str(": ");
                write_json(&map[k], indent + 1, out);
            }
            out.push('\n');
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Deterministic pretty JSON.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_json(value, 0, &mut out);
    out.push('\n');
    out
}

fn cell(value: &Value) -> String {
    let raw = match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => {
            let mut s = String::new();
            write_number(n, &mut s);
            if s == "null" {
                String::new()
            } else {
                s
            }
        }
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => String::new(),
    };
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

fn header_lines(header: &Map<String, Value>, out: &mut String) {
    let keys: BTreeSet<&String> = header.keys().collect();
    for k in keys {
        let _ = writeln!(out, "# {k} = {}", cell(&header[k]).trim_matches('"'));
    }
}

/// A spectrum result of a single run, written as one row per mode.
fn mode_table(output: &RunOutput) -> Option<&Vec<Value>> {
    match output.records.as_slice() {
        [only] if output.sweep_parameter.is_none() => only.outcome.as_ref().ok()?.get("modes")?.as_array(),
        _ => None,
    }
}

fn csv(output: &RunOutput) -> String {
    let mut out = String::new();
    header_lines(&output.header, &mut out);
    if let Some(modes) = mode_table(output) {
        out.push_str(&MODE_COLUMNS.join(","));
        out.push('\n');
        for m in modes {
            let row: Vec<String> = MODE_COLUMNS.iter().map(|c| cell(m.get(*c).unwrap_or(&Value::Null))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        return out;
    }
    let rows: Vec<BTreeMap<String, Value>> = output
        .records
        .iter()
        .map(|r| {
            let mut flat = BTreeMap::new();
            if let Ok(v) = &r.outcome {
                flatten("", v, &mut flat);
            }
            // Arrays of objects (mode lists) do not fit a single cell.
            flat.retain(|_, v| !matches!(v, Value::Array(a) if a.iter().any(Value::is_object)));
            flat
        })
        .collect();
    let columns: BTreeSet<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    let mut names = vec!["index".to_string()];
    names.extend(output.sweep_parameter.iter().cloned());
    names.extend(columns.iter().map(|c| c.to_string()));
    names.push("error".to_string());
    out.push_str(&names.iter().map(|n| cell(&Value::String(n.clone()))).collect::<Vec<_>>().join(","));
    out.push('\n');
    for (record, flat) in output.records.iter().zip(&rows) {
        let mut row = vec![record.index.to_string()];
        if output.sweep_parameter.is_some() {
            row.push(record.value.map(format_float).unwrap_or_default());
        }
        for c in &columns {
            row.push(flat.get(*c).map(cell).unwrap_or_default());
        }
        row.push(match &record.outcome {
            Err(e) => cell(&Value::String(format!("{}: {}", e.kind, e.message))),
            Ok(_) => String::new(),
        });
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn json(output: &RunOutput) -> String {
    let results: Vec<Value> = output
        .records
        .iter()
        .map(|r| {
            let mut entry = Map::new();
            entry.insert("index".into(), Value::from(r.index));
            if let (Some(p), Some(v)) = (&output.sweep_parameter, r.value) {
                entry.insert("parameter".into(), Value::String(p.clone()));
                entry.insert("value".into(), Value::from(v));
            }
            match &r.outcome {
                Ok(v) => entry.insert("result".into(), v.clone()),
                Err(e) => entry.insert("error".into(), e.to_value()),
            };
            Value::Object(entry)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("header".into(), Value::Object(output.header.clone()));
    doc.insert("results".into(), Value::Array(results));
    to_json_string(&Value::Object(doc))
}

/// Serializes run results.
pub fn emit(output: &RunOutput, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json(output),
        Format::Csv => csv(output),
    }
    .into_bytes()
}

/// Serializes a failure that prevented any run.
pub fn emit_error(error: &QapError, format: Format) -> Vec<u8> {
    let obj = ErrorObject::from(error);
    match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("error".into(), obj.to_value());
            to_json_string(&Value::Object(doc))
        }
        Format::Csv => format!(
            "kind,message,exit_code\n{},{},{}\n",
            cell(&Value::String(obj.kind)),
            cell(&Value::String(obj.message)),
            obj.exit_code
        ),
    }
    .into_bytes()
}

/// Writes bytes to `path`, creating parent directories.
pub fn write_output(bytes: &[u8], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| QapError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| QapError::Io(format!("{}: {e}", path.display())))
}
