use irrev::format::fmt_sig;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// A report as ordered key/value pairs plus the JSON form of the same data.
pub struct Record {
    rows: Vec<(String, String)>,
    json: Value,
}

impl Record {
    pub fn new(json: impl Serialize) -> Self {
        Record {
            rows: Vec::new(),
            json: serde_json::to_value(json).expect("report serializes"),
        }
    }

    pub fn row(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.rows.push((key.to_string(), value.into()));
        self
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Text => {
                let width = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.rows
                    .iter()
                    .map(|(k, v)| format!("{k:<width$}  {v}\n"))
                    .collect()
            }
            Format::Csv => {
                let mut out = String::from("param,value\n");
                for (k, v) in &self.rows {
                    out.push_str(&format!("{},{}\n", csv_field(k), csv_field(v)));
                }
                out
            }
            Format::Json => json(&self.json, precision),
        }
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Pretty JSON with every float rounded to `precision` significant digits.
pub fn json(value: &Value, precision: usize) -> String {
    let mut v = value.clone();
    round_floats(&mut v, precision);
    let mut out = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    out.push('\n');
    out
}

fn round_floats(v: &mut Value, precision: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked f64");
            if let Some(r) = fmt_sig(x, precision).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_floats(x, precision)),
        Value::Object(map) => map.values_mut().for_each(|x| round_floats(x, precision)),
        _ => {}
    }
}

pub fn real(x: f64, precision: usize) -> String {
    fmt_sig(x, precision)
}

pub fn reals(xs: &[f64], precision: usize) -> String {
    xs.iter().map(|&x| fmt_sig(x, precision)).collect::<Vec<_>>().join(" ")
}
