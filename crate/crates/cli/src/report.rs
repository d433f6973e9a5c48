//! Text, JSON and CSV rendering of command reports.
//!
//! Every command builds one `serde_json::Value`; text mode walks the same
//! value, so the two outputs always carry the same numbers.

use std::fmt::Write as _;

use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Finite floats in `{:.15e}`, integers verbatim, non-finite as JSON null.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format!("{:.15e}", n.as_f64().unwrap()),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            format!("[{}]", parts.join(","))
        }
        Value::Object(map) => {
            let parts: Vec<String> = map.iter().map(|(k, v)| format!("{k}={}", scalar(v))).collect();
            format!("{{{}}}", parts.join(","))
        }
    }
}

fn is_table(items: &[Value]) -> bool {
    !items.is_empty() && items.iter().all(Value::is_object)
}

fn table(out: &mut String, items: &[Value], sep: &str, pad: bool) {
    let columns: Vec<&String> = items[0].as_object().unwrap().keys().collect();
    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|row| {
            let row = row.as_object().unwrap();
            columns.iter().map(|c| row.get(*c).map(scalar).unwrap_or_default()).collect()
        })
        .collect();
    let widths: Vec<usize> = (0..columns.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([columns[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| -> String {
        if pad {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            padded.join(sep)
        } else {
            cells.join(sep)
        }
    };
    let _ = writeln!(out, "{}", line(columns.iter().map(|c| c.as_str()).collect()));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}

fn text_object(out: &mut String, map: &Map<String, Value>, prefix: &str) {
    for (key, v) in map {
        let name = format!("{prefix}{key}");
        match v {
            Value::Object(inner) => text_object(out, inner, &format!("{name}.")),
            Value::Array(items) if is_table(items) => {
                let _ = writeln!(out, "{name}:");
                table(out, items, "  ", true);
            }
            other => {
                let _ = writeln!(out, "{name} = {}", scalar(other));
            }
        }
    }
}

/// Renders `report` in `format`. CSV emits the array under `table_key`.
pub fn render(report: &Value, format: Format, table_key: &str) -> String {
    let mut out = String::new();
    match format {
        Format::Json => {
            out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
        }
        Format::Text => match report {
            Value::Object(map) => text_object(&mut out, map, ""),
            other => {
                let _ = writeln!(out, "{}", scalar(other));
            }
        },
        Format::Csv => {
            if let Some(Value::Array(items)) = report.get(table_key) {
                if is_table(items) {
                    table(&mut out, items, ",", false);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn text_mode_formats_floats_and_tables() {
        let v = json!({
            "alpha": number(0.5),
            "n": 8,
            "rows": [{"p": 0, "x": number(1.0)}, {"p": 1, "x": number(-2.5)}],
            "nested": {"flag": true},
        });
        let text = render(&v, Format::Text, "rows");
        assert!(text.contains("alpha = 5.000000000000000e-1"));
        assert!(text.contains("n = 8"));
        assert!(text.contains("nested.flag = true"));
        assert!(text.contains("-2.500000000000000e0"));
        let csv = render(&v, Format::Csv, "rows");
        assert_eq!(csv.lines().next(), Some("p,x"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(number(f64::NAN), Value::Null);
        assert_eq!(number(f64::INFINITY), Value::Null);
    }
}
