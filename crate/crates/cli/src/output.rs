//! Output encoding: floats carry 17 significant digits in both JSON and CSV.

use serde::Serialize;
use std::io::{self, Write};
use std::path::Path;

/// Compact JSON formatter that writes every f64 as `{:.16e}`.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".to_string()
    }
}

/// Header row plus data rows, comma separated.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| float(x)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Column-major JSON object; numeric cells stay numbers.
    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut map = serde_json::Map::new();
        for (i, h) in self.header.iter().enumerate() {
            let col: Vec<serde_json::Value> = self
                .rows
                .iter()
                .map(|r| match r[i].parse::<f64>() {
                    Ok(x) if x.is_finite() => serde_json::Value::from(x),
                    Ok(_) => serde_json::Value::Null,
                    Err(_) => serde_json::Value::from(r[i].clone()),
                })
                .collect();
            map.insert(h.clone(), serde_json::Value::Array(col));
        }
        to_json(&map)
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| sta_cost::Error::Config(format!("cannot write {}: {e}", p.display())).into()),
        None => {
            let mut o = io::stdout().lock();
            match o.write_all(text.as_bytes()).and_then(|_| o.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}
