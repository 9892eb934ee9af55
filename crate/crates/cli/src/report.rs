//! Output model shared by the subcommands: a list of named fields and an
//! optional table, written as JSON or CSV.

use std::io::Write;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Rounds to 12 significant digits and returns the shortest decimal that
/// reads back as the rounded value.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn num(x: f64) -> Value {
    let r = round12(x);
    serde_json::Number::from_f64(r).map(Value::Number).unwrap_or_else(|| Value::String(format!("{r}")))
}

/// Serializes `x` and rounds every non-integer number in it.
pub fn rounded<T: serde::Serialize>(x: &T) -> Value {
    round_all(serde_json::to_value(x).expect("report values serialize"))
}

fn round_all(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().expect("f64 number")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_all).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_all(v))).collect()),
        other => other,
    }
}

/// Exact rationals travel as their `p/q` strings.
pub fn exact(r: &impl std::fmt::Display) -> Value {
    Value::String(r.to_string())
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub fields: Vec<(String, Value)>,
    pub table: Option<Table>,
    /// Set when a checked identity or bound failed.
    pub violation: bool,
    /// Replaces the generated CSV (point batches use their own schema).
    pub csv: Option<String>,
}

impl Report {
    pub fn field(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn with_table(mut self, headers: &[&str], rows: Vec<Vec<Value>>) -> Self {
        self.table = Some(Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows });
        self
    }

    pub fn with_csv(mut self, text: String) -> Self {
        self.csv = Some(text);
        self
    }

    pub fn flag(mut self, violation: bool) -> Self {
        self.violation |= violation;
        self
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.fields {
            map.insert(k.clone(), v.clone());
        }
        if let Some(t) = &self.table {
            let rows = t
                .rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (h, v) in t.headers.iter().zip(r) {
                        m.insert(h.clone(), v.clone());
                    }
                    Value::Object(m)
                })
                .collect();
            map.insert("rows".into(), Value::Array(rows));
        }
        Value::Object(map)
    }

    /// The table if there is one, else `key,value` lines.
    pub fn to_csv(&self) -> String {
        if let Some(text) = &self.csv {
            return text.clone();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let cell = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match &self.table {
            Some(t) => {
                w.write_record(&t.headers).expect("in-memory csv");
                for r in &t.rows {
                    w.write_record(r.iter().map(cell)).expect("in-memory csv");
                }
            }
            None => {
                w.write_record(["key", "value"]).expect("in-memory csv");
                for (k, v) in &self.fields {
                    w.write_record([k.clone(), cell(v)]).expect("in-memory csv");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
        }
    }

    pub fn write(&self, format: Format, path: Option<&std::path::Path>) -> std::io::Result<()> {
        let text = self.render(format);
        match path {
            Some(p) => std::fs::write(p, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round12(1.9866071428571428), 1.98660714286);
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(2.0), 2.0);
        assert_eq!(num(1.0 / 3.0).to_string(), "0.333333333333");
    }

    #[test]
    fn csv_quotes_labels() {
        let r = Report::default().field("cell", "max{V1,V2}<V12<2");
        assert_eq!(r.to_csv(), "key,value\ncell,\"max{V1,V2}<V12<2\"\n");
    }
}
