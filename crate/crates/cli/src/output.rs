//! CSV tables with a `# key = value` header and the JSON run summary.
//!
//! Files are written into a hidden staging directory inside the output
//! directory and moved into place only once every file is complete, so a
//! failed run leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Formatted cell values; floats use the shortest round-trip form so reruns
/// are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

pub fn num(x: f64) -> String {
    // Debug switches to exponent form for very small or large magnitudes
    format!("{x:?}")
}

/// Dotted `key = value` pairs of a JSON tree, in document order.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Null => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn write_table(dir: &Path, table: &Table, header: &[(String, String)]) -> Result<()> {
    let path = dir.join(table.file_name());
    let mut file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    for (k, v) in header {
        writeln!(file, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every table plus `summary.json` into `out`, atomically per run.
/// Returns the final paths.
pub fn write_all(out: &Path, tables: &[Table], header: &[(String, String)], summary: &impl Serialize) -> Result<Vec<PathBuf>> {
    let created = !out.exists();
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let result = (|| -> Result<Vec<PathBuf>> {
        let staging = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(out)
            .context("creating staging directory")?;
        let mut names = Vec::new();
        for t in tables {
            write_table(staging.path(), t, header)?;
            names.push(t.file_name());
        }
        let json = serde_json::to_string_pretty(summary)?;
        fs::write(staging.path().join("summary.json"), json + "\n")?;
        names.push("summary.json".to_string());
        let mut finals = Vec::new();
        for n in names {
            let dest = out.join(&n);
            fs::rename(staging.path().join(&n), &dest).with_context(|| format!("moving {n} into place"))?;
            finals.push(dest);
        }
        Ok(finals)
    })();
    if result.is_err() && created {
        let _ = fs::remove_dir_all(out);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nested() {
        let v = serde_json::json!({"a": {"b": 1.5, "c": [1, 2]}, "d": "x", "e": null});
        let mut out = Vec::new();
        flatten("", &v, &mut out);
        assert_eq!(
            out,
            vec![
                ("a.b".to_string(), "1.5".to_string()),
                ("a.c".to_string(), "[1,2]".to_string()),
                ("d".to_string(), "x".to_string()),
            ]
        );
    }

    #[test]
    fn writes_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let mut t = Table::new("flux", &["length", "j"]);
        t.push(vec!["2".into(), num(0.25)]);
        let header = vec![("recipe".to_string(), "size-scan".to_string())];
        let files = write_all(&out, &[t], &header, &serde_json::json!({"passed": true})).unwrap();
        assert_eq!(files.len(), 2);
        let text = fs::read_to_string(out.join("flux.csv")).unwrap();
        assert_eq!(text, "# recipe = size-scan\nlength,j\n2,0.25\n");
        assert_eq!(num(1.8e-6), "1.8e-6");
        assert_eq!(num(3.0), "3.0");
        // no staging directory left behind
        let entries: Vec<_> = fs::read_dir(&out).unwrap().collect();
        assert_eq!(entries.len(), 2);
    }
}
