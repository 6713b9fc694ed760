//! JSON documents for systems and reports, and the CSV tables.
//!
//! A system document looks like
//!
//! ```json
//! {"n": 2, "h": [0.3, 0.3], "j": {"format": "coo", "entries": [[0, 1, 0.5]]}}
//! ```
//!
//! where `j` is either `{"format": "dense", "values": ...}` (nested rows or a
//! flat row-major array) or `{"format": "coo", "entries": [[i, j, v], ...]}`
//! listing the upper triangle only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::CharacteristicTrace;
use crate::error::{Error, Result};
use crate::exact::{GibbsReport, LeeYangZeros};
use crate::sampler::SampleEstimate;
use crate::system::SpinSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Dense,
    Coo,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum DenseValues {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
enum CouplingDocument {
    Dense { values: DenseValues },
    Coo { entries: Vec<(usize, usize, f64)> },
}

/// Unknown top-level keys (such as a provenance header) are ignored.
#[derive(Debug, Serialize, Deserialize)]
struct SystemDocument {
    n: usize,
    h: Vec<f64>,
    j: CouplingDocument,
}

impl SystemDocument {
    fn from_system(system: &SpinSystem, format: MatrixFormat) -> Self {
        let n = system.n();
        let j = match format {
            MatrixFormat::Dense => CouplingDocument::Dense {
                values: DenseValues::Nested((0..n).map(|i| system.row(i).to_vec()).collect()),
            },
            MatrixFormat::Coo => CouplingDocument::Coo {
                entries: (0..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| system.coupling(i, j) != 0.0)
                    .map(|(i, j)| (i, j, system.coupling(i, j)))
                    .collect(),
            },
        };
        SystemDocument {
            n,
            h: system.fields().to_vec(),
            j,
        }
    }

    fn into_system(self) -> Result<SpinSystem> {
        if self.h.len() != self.n {
            return Err(Error::Format(format!(
                "n = {} but h has {} entries",
                self.n,
                self.h.len()
            )));
        }
        match self.j {
            CouplingDocument::Dense {
                values: DenseValues::Nested(rows),
            } => SpinSystem::from_rows(&rows, self.h),
            CouplingDocument::Dense {
                values: DenseValues::Flat(flat),
            } => SpinSystem::new(flat, self.h),
            CouplingDocument::Coo { entries } => SpinSystem::from_upper_triples(self.h, entries),
        }
    }
}

/// Converts a [`serde_json::Value`] system document into a system.
pub fn system_from_value(value: serde_json::Value) -> Result<SpinSystem> {
    serde_json::from_value::<SystemDocument>(value)?.into_system()
}

pub fn system_from_json(text: &str) -> Result<SpinSystem> {
    serde_json::from_str::<SystemDocument>(text)?.into_system()
}

pub fn system_to_json(system: &SpinSystem, format: MatrixFormat) -> String {
    serde_json::to_string_pretty(&system_to_value(system, format)).expect("system documents always serialize")
}

pub fn system_to_value(system: &SpinSystem, format: MatrixFormat) -> serde_json::Value {
    serde_json::to_value(SystemDocument::from_system(system, format)).expect("system documents always serialize")
}

pub fn read_system(path: impl AsRef<Path>) -> Result<SpinSystem> {
    system_from_json(&fs::read_to_string(path)?)
}

pub fn write_system(path: impl AsRef<Path>, system: &SpinSystem, format: MatrixFormat) -> Result<()> {
    fs::write(path, system_to_json(system, format) + "\n")?;
    Ok(())
}

pub fn report_to_json(report: &GibbsReport) -> String {
    serde_json::to_string_pretty(report).expect("reports always serialize")
}

pub fn report_from_json(text: &str) -> Result<GibbsReport> {
    Ok(serde_json::from_str(text)?)
}

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header comment lines prefixed with `# `.
pub fn comment_block(lines: &[String]) -> String {
    lines.iter().fold(String::new(), |mut out, line| {
        for part in line.lines() {
            let _ = writeln!(out, "# {part}");
        }
        out
    })
}

/// Columns `t, w1, drift, m1`.
pub fn trace_csv(trace: &CharacteristicTrace) -> String {
    let mut out = String::from("t,w1,drift,m1\n");
    for k in 0..trace.nodes() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_f64(trace.times[k]),
            format_f64(trace.w1_values[k]),
            format_f64(trace.drift_values[k]),
            format_f64(trace.m1_values[k])
        );
    }
    out
}

/// Columns `site, m_hat, std_err`.
pub fn estimate_csv(estimate: &SampleEstimate) -> String {
    let mut out = String::from("site,m_hat,std_err\n");
    for (i, (m, se)) in estimate.m_hat.iter().zip(&estimate.std_err).enumerate() {
        let _ = writeln!(out, "{i},{},{}", format_f64(*m), format_f64(*se));
    }
    out
}

/// Columns `re, im, modulus`.
pub fn zeros_csv(zeros: &LeeYangZeros) -> String {
    let mut out = String::from("re,im,modulus\n");
    for z in &zeros.zeros {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_f64(z.re),
            format_f64(z.im),
            format_f64(z.norm())
        );
    }
    out
}
