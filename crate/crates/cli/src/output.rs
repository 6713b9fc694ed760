use std::fmt::Write as _;

use ferromf::io::{comment_block, format_f64};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format, TaskKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a task produces before it is written out.
#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub json: Value,
    /// CSV body including the column row.
    pub csv: Option<String>,
    /// One line per failed assertion, with the offending values.
    pub violations: Vec<String>,
}

/// A small CSV builder; cells are pre-formatted strings.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| quote(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn num(x: f64) -> String {
    format_f64(x)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// Compact resolved config and its SHA-256.
pub fn fingerprint(config: &ExperimentConfig) -> (String, String) {
    let compact = serde_json::to_string(config).expect("configs always serialize");
    let digest = Sha256::digest(compact.as_bytes());
    let hex = digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    (compact, hex)
}

fn meta(config: &ExperimentConfig, task: TaskKind) -> Value {
    let (_, hash) = fingerprint(config);
    json!({
        "tool": "ferromf",
        "version": VERSION,
        "task": task.name(),
        "seed": config.seed,
        "config_sha256": hash,
        "config": config,
    })
}

/// Renders the artifact. No timestamps, so identical configs give identical bytes.
pub fn render(config: &ExperimentConfig, task: TaskKind, output: &TaskOutput, format: Format) -> String {
    match (format, &output.csv) {
        (Format::Csv, Some(body)) => {
            let (compact, hash) = fingerprint(config);
            let header = comment_block(&[
                format!("ferromf {VERSION}"),
                format!("task {}", task.name()),
                format!("seed {}", config.seed),
                format!("config-sha256 {hash}"),
                format!("config {compact}"),
            ]);
            header + body
        }
        _ => {
            let doc = if task == TaskKind::Gen {
                // a system document that still loads as one
                let mut doc = output.json.clone();
                if let Value::Object(map) = &mut doc {
                    map.insert("meta".into(), meta(config, task));
                }
                doc
            } else {
                json!({"meta": meta(config, task), "result": output.json})
            };
            serde_json::to_string_pretty(&doc).expect("values always serialize") + "\n"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_with_separators_are_quoted() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x, \"y\"".into()]);
        assert_eq!(t.render(), "a,b\n1,\"x, \"\"y\"\"\"\n");
    }

    #[test]
    fn missing_values_are_empty_cells() {
        assert_eq!(opt(None), "");
        assert_eq!(opt(Some(0.5)), "5.0000000000000000e-1");
    }
}
