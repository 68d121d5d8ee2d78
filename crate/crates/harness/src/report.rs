//! Report serialization.
//!
//! JSON reports are a single object carrying `schema_version` and `kind`
//! next to the report's own fields. CSV reports come in two layouts: wide
//! tables for naturally tabular data (one row per sample, cable or pose) and
//! a two-column `field,value` layout for everything else, with nested fields
//! spelled as paths such as `solution[2]` or `target.position_m[0]`.
//!
//! Floats are written in their shortest round-trip form, so parsing an
//! emitted file reproduces the in-memory report exactly.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// A report that can be written as JSON and CSV and read back.
pub trait Report: Serialize + DeserializeOwned {
    /// Value of the `kind` field in JSON output.
    const KIND: &'static str;

    fn to_csv(&self) -> Result<String> {
        fields_to_csv(self)
    }

    fn from_csv(text: &str) -> Result<Self> {
        fields_from_csv(text)
    }
}

#[derive(Serialize)]
struct Envelope<'a, R> {
    schema_version: u32,
    kind: &'static str,
    #[serde(flatten)]
    report: &'a R,
}

pub fn to_json<R: Report>(report: &R) -> Result<String> {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        kind: R::KIND,
        report,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text)
}

pub fn from_json<R: Report>(text: &str) -> Result<R> {
    let mut value: Value = serde_json::from_str(text)?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| HarnessError::report("top level is not an object"))?;
    match object.remove("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(HarnessError::report(format!("unsupported schema_version {v}"))),
        None => return Err(HarnessError::report("missing schema_version")),
    }
    match object.remove("kind") {
        Some(Value::String(kind)) if kind == R::KIND => {}
        Some(other) => {
            return Err(HarnessError::report(format!(
                "expected kind {:?}, found {other}",
                R::KIND
            )))
        }
        None => return Err(HarnessError::report("missing kind")),
    }
    Ok(serde_json::from_value(value)?)
}

/// Float in shortest round-trip form.
pub(crate) fn num(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn write_table(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::report(e.to_string()))
}

/// Parsed wide table with column lookup by header name.
pub(crate) struct Table {
    pub header: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers()?.iter().map(str::to_owned).collect();
        let rows = reader.records().collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::report(format!("missing column {name}")))
    }

    /// Header names with the given prefix and suffix, in column order, with
    /// the middle part stripped out.
    pub fn columns_between(&self, prefix: &str, suffix: &str) -> Vec<(usize, String)> {
        self.header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.len() > prefix.len() + suffix.len())
            .filter_map(|(i, h)| {
                h.strip_prefix(prefix)
                    .and_then(|rest| rest.strip_suffix(suffix))
                    .map(|mid| (i, mid.to_owned()))
            })
            .collect()
    }

    pub fn text<'a>(&self, row: &'a csv::StringRecord, column: usize) -> &'a str {
        row.get(column).unwrap_or("")
    }

    pub fn f64(&self, row: &csv::StringRecord, column: usize) -> Result<f64> {
        parse_f64(self.text(row, column), &self.header[column])
    }
}

pub(crate) fn parse_f64(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| HarnessError::report(format!("{what}: {text:?} is not a number")))
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) if map.is_empty() => out.push((prefix.to_owned(), "{}".into())),
        Value::Object(map) => {
            for (key, v) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(&path, v, out);
            }
        }
        Value::Array(items) if items.is_empty() => out.push((prefix.to_owned(), "[]".into())),
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}

enum Segment {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment>> {
    let bad = || HarnessError::report(format!("bad field path {path:?}"));
    let mut segments = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if key.is_empty() {
            return Err(bad());
        }
        segments.push(Segment::Key(key.to_owned()));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            let index = rest[1..close].parse().map_err(|_| bad())?;
            segments.push(Segment::Index(index));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad());
            }
        }
    }
    Ok(segments)
}

fn leaf(text: &str) -> Value {
    match serde_json::from_str::<Value>(text) {
        Ok(v @ (Value::Number(_) | Value::Bool(_) | Value::Null)) => v,
        Ok(Value::Array(a)) if a.is_empty() && text == "[]" => Value::Array(a),
        Ok(Value::Object(o)) if o.is_empty() && text == "{}" => Value::Object(o),
        _ => Value::String(text.to_owned()),
    }
}

fn insert(slot: &mut Value, segments: &[Segment], value: Value, path: &str) -> Result<()> {
    let Some((first, rest)) = segments.split_first() else {
        *slot = value;
        return Ok(());
    };
    let clash = || HarnessError::report(format!("conflicting field path {path:?}"));
    match first {
        Segment::Key(key) => {
            if slot.is_null() {
                *slot = Value::Object(Map::new());
            }
            let map = slot.as_object_mut().ok_or_else(clash)?;
            let child = map.entry(key.clone()).or_insert(Value::Null);
            insert(child, rest, value, path)
        }
        Segment::Index(i) => {
            if slot.is_null() {
                *slot = Value::Array(Vec::new());
            }
            let items = slot.as_array_mut().ok_or_else(clash)?;
            if *i > items.len() {
                return Err(HarnessError::report(format!(
                    "field path {path:?} skips array elements"
                )));
            }
            if *i == items.len() {
                items.push(Value::Null);
            }
            insert(&mut items[*i], rest, value, path)
        }
    }
}

/// `field,value` CSV of any serializable report.
pub(crate) fn fields_to_csv<T: Serialize>(report: &T) -> Result<String> {
    let mut pairs = Vec::new();
    flatten("", &serde_json::to_value(report)?, &mut pairs);
    let rows: Vec<Vec<String>> = pairs.into_iter().map(|(k, v)| vec![k, v]).collect();
    write_table(&["field".into(), "value".into()], &rows)
}

pub(crate) fn fields_from_csv<T: DeserializeOwned>(text: &str) -> Result<T> {
    let table = Table::parse(text)?;
    if table.header != ["field", "value"] {
        return Err(HarnessError::report("expected a field,value header"));
    }
    let mut root = Value::Object(Map::new());
    for row in &table.rows {
        let path = table.text(row, 0);
        insert(&mut root, &parse_path(path)?, leaf(table.text(row, 1)), path)?;
    }
    Ok(serde_json::from_value(root)?)
}
