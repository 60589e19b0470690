//! Run manifests and report writers. Reports carry no timestamps, so a rerun
//! from the same manifest reproduces them byte for byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TOOL: &str = "isingrbm";

/// Everything needed to rerun the command that produced an output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub params: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, inputs: Vec<String>, params: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            inputs,
            params: serde_json::to_value(params)?,
        })
    }
}

pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    crate::format::write_file(path, to_json(value)?.as_bytes())
}

/// One compact JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Header row plus one row per record.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Formats seconds for tables: `inf` when unbounded.
pub fn seconds(t: f64) -> String {
    if t.is_finite() {
        format!("{t:e}")
    } else {
        "inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_serialises_deterministically() {
        #[derive(Serialize)]
        struct P {
            b: u32,
            a: f64,
        }
        let m = RunManifest::new("bench", 3, vec!["c".into()], &P { b: 1, a: 0.5 }).unwrap();
        let a = to_json(&m).unwrap();
        assert_eq!(a, to_json(&m.clone()).unwrap());
        assert!(a.contains("\"command\": \"bench\"") && a.ends_with("}\n"));
        assert!(!a.contains("time"));
        assert_eq!(seconds(f64::INFINITY), "inf");
        assert_eq!(seconds(0.001), "1e-3");
    }

    #[test]
    fn infinite_values_become_null() {
        let s = serde_json::to_string(&f64::INFINITY).unwrap();
        assert_eq!(s, "null");
    }
}
