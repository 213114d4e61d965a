use std::fmt::Write as _;

use serde_json::Value;

/// What a subcommand produced, before formatting.
pub struct Output {
    pub json: Value,
    /// CSV rendering, for commands that have a tabular result.
    pub csv: Option<String>,
    /// The problem had no feasible solution.
    pub infeasible: bool,
}

impl Output {
    pub fn new(json: Value) -> Self {
        Output {
            json,
            csv: None,
            infeasible: false,
        }
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(", "),
        Value::Object(_) => v.to_string(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, rows);
            }
        }
        _ => rows.push((prefix.to_string(), v.clone())),
    }
}

fn table_of(items: &[Value]) -> String {
    let rows: Vec<Vec<(String, Value)>> = items
        .iter()
        .map(|it| {
            let mut r = Vec::new();
            flatten("", it, &mut r);
            r
        })
        .collect();
    let mut cols: Vec<String> = Vec::new();
    for r in &rows {
        for (k, _) in r {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            cols.iter()
                .map(|c| r.iter().find(|(k, _)| k == c).map_or("-".into(), |(_, v)| scalar(v)))
                .collect()
        })
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, vals: &[String]| {
        let parts: Vec<String> = vals
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &cols);
    for r in &cells {
        line(&mut out, r);
    }
    out
}

/// Human-readable rendering: objects as aligned key/value lines, arrays of
/// objects as column tables.
pub fn render_table(v: &Value) -> String {
    match v {
        Value::Array(items) if items.iter().all(Value::is_object) => table_of(items),
        Value::Object(map) => {
            let mut out = String::new();
            let mut nested = Vec::new();
            let mut rows = Vec::new();
            for (k, x) in map {
                match x {
                    Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object) => {
                        nested.push((k.clone(), items.clone()))
                    }
                    _ => flatten(k, x, &mut rows),
                }
            }
            let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, x) in rows {
                let _ = writeln!(out, "{k:<w$}  {}", scalar(&x));
            }
            for (k, items) in nested {
                let _ = writeln!(out, "\n{k}:");
                out.push_str(&table_of(&items));
            }
            out
        }
        other => format!("{}\n", scalar(other)),
    }
}
