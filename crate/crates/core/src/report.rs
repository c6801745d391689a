//! Flat key-value reports shared by every command.
//!
//! The text form is one `key=value` line per entry; the JSON form is a single
//! object with the same keys in the same order; the CSV form is `key,value`.

use std::fmt::Write as _;

use serde_json::{Map, Number};

use crate::bloch::BlochVector;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Number(f64),
    Count(u64),
    Flag(bool),
    Vector(BlochVector),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Text(s) => s.clone(),
            // Shortest round-trip form, switching to exponent notation for tiny values.
            Value::Number(x) => format!("{x:?}"),
            Value::Count(n) => n.to_string(),
            Value::Flag(b) => b.to_string(),
            Value::Vector(v) => format!("{:?},{:?},{:?}", v.x, v.y, v.z),
        }
    }

    fn json(&self) -> serde_json::Value {
        fn num(x: f64) -> serde_json::Value {
            Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
        }
        match self {
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Number(x) => num(*x),
            Value::Count(n) => serde_json::Value::Number((*n).into()),
            Value::Flag(b) => serde_json::Value::Bool(*b),
            Value::Vector(v) => serde_json::Value::Array(vec![num(v.x), num(v.y), num(v.z)]),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Number(x)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Value::Count(n as u64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Flag(b)
    }
}

impl From<BlochVector> for Value {
    fn from(v: BlochVector) -> Self {
        Value::Vector(v)
    }
}

/// Ordered list of report entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.push(key, value);
        self
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}={}", v.render()).expect("writing to a String cannot fail");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, serde_json::Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("report values are serializable");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in &self.entries {
            let rendered = v.render();
            if rendered.contains([',', '"', '\n']) {
                writeln!(out, "{k},\"{}\"", rendered.replace('"', "\"\""))
            } else {
                writeln!(out, "{k},{rendered}")
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}
