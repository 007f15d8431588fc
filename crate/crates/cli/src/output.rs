//! Tables and metadata as deterministic text.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use qubit_lgti::export::format_float;
use qubit_lgti::{Regime, SystemParams, Temperature};
use serde_json::{json, Value};

use crate::error::CliError;

/// One emitted file, or a stdout block when `path` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub body: String,
}

/// Ordered key/value metadata, rendered as `# key = value` CSV comments or
/// a JSON object.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(Vec<(String, Value)>);

impl Metadata {
    pub fn new(kind: &str) -> Self {
        let mut m = Metadata::default();
        m.push("output", json!(kind));
        m.push("units", json!("hbar = k_B = 1; times in units of 1/rabi"));
        m
    }

    pub fn push(&mut self, key: &str, value: Value) {
        self.0.push((key.to_string(), value));
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.push(key, json!(value));
    }

    pub fn params(&mut self, p: &SystemParams) {
        self.float("omega0", p.omega0);
        self.float("rabi", p.rabi);
        self.float("gamma0", p.gamma0);
        self.float("ratio_r", p.ratio_r());
        match p.temperature {
            Temperature::Zero => self.push("temperature", json!("zero")),
            Temperature::Beta(b) => self.float("beta", b),
        }
        self.float("squeeze_s", p.squeeze_s);
    }

    pub fn regime(&mut self, regime: Regime, mu_s: (f64, f64)) {
        self.push("regime", json!(regime.as_str()));
        self.float("mu_s_re", mu_s.0);
        self.float("mu_s_im", mu_s.1);
    }

    pub fn csv_header(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let rendered = match v {
                Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap_or(f64::NAN)),
                Value::Number(n) => n.to_string(),
                Value::String(text) => text.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("# {k} = {rendered}\n"));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().cloned().collect())
    }
}

/// Numeric table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut s = meta.csv_header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            s.push_str(&fields.join(","));
            s.push('\n');
        }
        s
    }

    /// Column-major JSON: `{ column: [values…] }`.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (i, c) in self.columns.iter().enumerate() {
            obj.insert(
                c.clone(),
                json!(self.rows.iter().map(|r| r[i]).collect::<Vec<f64>>()),
            );
        }
        Value::Object(obj)
    }
}

pub fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain JSON values");
    s.push('\n');
    s
}

pub fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// `dir/stem_{index}.ext` for the `index`-th of several curves.
pub fn numbered(path: &Path, index: usize) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index}"),
    };
    path.with_file_name(name)
}

pub fn write_all(artifacts: &[Artifact]) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let mut first_block = true;
    for a in artifacts {
        match &a.path {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)
                        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                }
                fs::write(path, &a.body)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                log::info!("wrote {}", path.display());
            }
            None => {
                if !first_block {
                    writeln!(lock).map_err(|e| CliError::Io(e.to_string()))?;
                }
                first_block = false;
                lock.write_all(a.body.as_bytes())
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
    }
    lock.flush().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_paths() {
        assert_eq!(
            numbered(Path::new("out/run.csv"), 2),
            PathBuf::from("out/run_2.csv")
        );
        assert_eq!(numbered(Path::new("run"), 0), PathBuf::from("run_0"));
    }

    #[test]
    fn csv_rendering() {
        let mut meta = Metadata::new("test");
        meta.float("beta", 10.0);
        meta.push("count", json!(2usize));
        let mut t = Table::new(&["t", "x"]);
        t.rows.push(vec![0.0, 0.5]);
        let text = t.to_csv(&meta);
        assert!(text.contains("# beta = 1.00000000000e1\n# count = 2\n"));
        assert!(text.ends_with("t,x\n0.00000000000e0,5.00000000000e-1\n"));
        assert_eq!(t.to_json()["x"][0], 0.5);
        assert_eq!(csv_field("a, b"), "\"a, b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
