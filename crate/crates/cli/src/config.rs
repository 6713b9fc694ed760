use std::path::PathBuf;

use ferromf::exact::SpinPolynomial;
use ferromf::io::MatrixFormat;
use ferromf::models::KacSpec;
use ferromf::sampler::Estimator;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A fully resolved experiment: model, task, parameters and output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
    #[serde(default)]
    pub params: TaskParams,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    CurieWeiss {
        n: usize,
        beta: f64,
        h: f64,
    },
    Kac(KacSpec),
    Diluted {
        n: usize,
        beta: f64,
        p: f64,
        h: f64,
        /// Falls back to the experiment seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    RankOne {
        w: Vec<f64>,
        h: f64,
    },
    /// A system document on disk, optionally with its fields replaced by a
    /// uniform value.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
    },
    /// Couplings uniform on `[0, j_max]`, fields uniform on `[h_min, h_max]`.
    Random {
        n: usize,
        j_max: f64,
        h_min: f64,
        h_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Gen,
    VerifyBound,
    ResidualSweep,
    LeeYang,
    Characteristic,
    Lemma1,
    Lemma2,
    Corederid,
    LowTemp,
    PositiveState,
    Sample,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Gen => "gen",
            TaskKind::VerifyBound => "verify-bound",
            TaskKind::ResidualSweep => "residual-sweep",
            TaskKind::LeeYang => "lee-yang",
            TaskKind::Characteristic => "characteristic",
            TaskKind::Lemma1 => "lemma1",
            TaskKind::Lemma2 => "lemma2",
            TaskKind::Corederid => "corederid",
            TaskKind::LowTemp => "low-temp",
            TaskKind::PositiveState => "positive-state",
            TaskKind::Sample => "sample",
        }
    }

    pub fn default_format(self) -> Format {
        match self {
            TaskKind::Gen | TaskKind::VerifyBound | TaskKind::Lemma2 | TaskKind::LowTemp => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// Sweep axes; an empty axis keeps the model's own value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub n: Vec<usize>,
    pub beta: Vec<f64>,
    pub h: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    Beta,
    H,
    P,
    Lambda,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::N, Axis::Beta, Axis::H, Axis::P, Axis::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::Beta => "beta",
            Axis::H => "h",
            Axis::P => "p",
            Axis::Lambda => "lambda",
        }
    }
}

impl Grid {
    pub fn values(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::N => self.n.iter().map(|&n| n as f64).collect(),
            Axis::Beta => self.beta.clone(),
            Axis::H => self.h.clone(),
            Axis::P => self.p.clone(),
            Axis::Lambda => self.lambda.clone(),
        }
    }

    pub fn active_axes(&self) -> Vec<Axis> {
        Axis::ALL.into_iter().filter(|&a| !self.values(a).is_empty()).collect()
    }

    /// Cross product in row-major order over the active axes.
    pub fn points(&self) -> Vec<Vec<(Axis, f64)>> {
        let axes = self.active_axes();
        let mut points = vec![Vec::new()];
        for axis in axes {
            let values = self.values(axis);
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((axis, v));
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskParams {
    /// Largest system handled by enumeration; bigger ones are sampled.
    pub exact_cap: usize,
    pub steps: usize,
    pub site: usize,
    pub times: Vec<f64>,
    /// Direction `s` for the derivative checks; defaults to the couplings of
    /// the distinguished site.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    pub alpha: f64,
    pub delta: f64,
    pub sizes: Vec<usize>,
    pub threshold: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub estimator: Estimator,
    /// Task-specific tolerance; each task documents its default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub grid: Grid,
    pub matrix: MatrixFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<SpinPolynomial>,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            exact_cap: 20,
            steps: ferromf::dynamics::DEFAULT_STEPS,
            site: 0,
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            direction: None,
            alpha: 1.5,
            delta: 0.25,
            sizes: vec![100, 1000, 10_000],
            threshold: 0.5,
            sweeps: 10_000,
            burn_in: 1_000,
            estimator: Estimator::default(),
            tolerance: None,
            grid: Grid::default(),
            matrix: MatrixFormat::Dense,
            observable: None,
        }
    }
}

/// Configuration problems; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Sets `path` (dot separated) inside `root` to `value`, creating objects as
/// needed. The value is parsed as JSON, falling back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> anyhow::Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(format!("override `{assignment}` is not of the form path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (k, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(config_error(format!("override path `{path}` has an empty segment")));
        }
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("just made an object");
        if k + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one segment")
}

/// Reads the optional config file, applies `--set` overrides, and decodes.
pub fn load(text: Option<(&str, &str)>, overrides: &[String]) -> anyhow::Result<ExperimentConfig> {
    if overrides.is_empty() {
        let (origin, body) = text.ok_or_else(|| config_error("no configuration given; pass --config or --set"))?;
        // decoding straight from text keeps line and column numbers in errors
        return serde_json::from_str(body).map_err(|e| config_error(format!("{origin}: {e}")));
    }
    let mut root = match text {
        Some((origin, body)) => {
            serde_json::from_str::<Value>(body).map_err(|e| config_error(format!("{origin}: {e}")))?
        }
        None => Value::Object(Default::default()),
    };
    for assignment in overrides {
        apply_override(&mut root, assignment)?;
    }
    serde_json::from_value(root).map_err(|e| config_error(format!("after overrides: {e}")))
}

pub fn validate(config: &ExperimentConfig) -> anyhow::Result<()> {
    let p = &config.params;
    if p.steps == 0 {
        return Err(config_error("params.steps must be at least 1"));
    }
    if p.sweeps == 0 {
        return Err(config_error("params.sweeps must be at least 1"));
    }
    if p.times.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(config_error("params.times must lie in [0, 1]"));
    }
    if config.task == Some(TaskKind::ResidualSweep) {
        if p.grid.active_axes().is_empty() {
            return Err(config_error("residual-sweep needs a non-empty params.grid"));
        }
        for axis in p.grid.active_axes() {
            if !config.model.has_axis(axis) {
                return Err(config_error(format!(
                    "grid axis `{}` does not apply to this model",
                    axis.name()
                )));
            }
        }
    }
    if config.task == Some(TaskKind::Gen) && config.output.format == Some(Format::Csv) {
        return Err(config_error("gen writes a JSON system document; CSV is not available"));
    }
    Ok(())
}

impl ModelConfig {
    pub fn has_axis(&self, axis: Axis) -> bool {
        matches!(
            (self, axis),
            (_, Axis::H)
                | (ModelConfig::CurieWeiss { .. }, Axis::N | Axis::Beta)
                | (ModelConfig::Kac(_), Axis::N | Axis::Beta | Axis::Lambda)
                | (ModelConfig::Diluted { .. }, Axis::N | Axis::Beta | Axis::P)
                | (ModelConfig::Random { .. }, Axis::N)
        )
    }

    /// The model with one parameter replaced. For Kać boxes, `n` is the side length.
    pub fn with_axis(&self, axis: Axis, value: f64) -> ModelConfig {
        let mut m = self.clone();
        let as_count = value.round().max(0.0) as usize;
        match (&mut m, axis) {
            (ModelConfig::CurieWeiss { n, .. }, Axis::N)
            | (ModelConfig::Diluted { n, .. }, Axis::N)
            | (ModelConfig::Random { n, .. }, Axis::N) => *n = as_count,
            (ModelConfig::Kac(spec), Axis::N) => spec.box_side = as_count,
            (ModelConfig::CurieWeiss { beta, .. }, Axis::Beta) | (ModelConfig::Diluted { beta, .. }, Axis::Beta) => {
                *beta = value
            }
            (ModelConfig::Kac(spec), Axis::Beta) => spec.beta = value,
            (ModelConfig::Kac(spec), Axis::Lambda) => spec.lambda = value,
            (ModelConfig::Diluted { p, .. }, Axis::P) => *p = value,
            (ModelConfig::CurieWeiss { h, .. }, Axis::H)
            | (ModelConfig::Diluted { h, .. }, Axis::H)
            | (ModelConfig::RankOne { h, .. }, Axis::H) => *h = value,
            (ModelConfig::Kac(spec), Axis::H) => spec.h = value,
            (ModelConfig::File { h, .. }, Axis::H) => *h = Some(value),
            (ModelConfig::Random { h_min, h_max, .. }, Axis::H) => {
                *h_min = value;
                *h_max = value;
            }
            _ => {}
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "model": {"kind": "diluted", "n": 50, "beta": 0.8, "p": 0.1, "h": 0.4},
                "task": "residual-sweep",
                "params": {"grid": {"n": [10, 20], "h": [0.1, 0.2, 0.3]}},
                "seed": 7
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn round_trips_losslessly() {
        let config = sample();
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), config);

        let kac: ExperimentConfig = serde_json::from_str(
            r#"{"model": {"kind": "kac", "dimension": 1, "box_side": 8, "lambda": 0.5, "beta": 0.8, "h": 0.5,
                "kernel": {"kind": "table", "radii": [0, 1], "values": [1, 0]}}}"#,
        )
        .unwrap();
        let text = serde_json::to_string(&kac).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), kac);
    }

    #[test]
    fn grid_points_are_row_major() {
        let points = sample().params.grid.points();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0], vec![(Axis::N, 10.0), (Axis::H, 0.1)]);
        assert_eq!(points[1], vec![(Axis::N, 10.0), (Axis::H, 0.2)]);
        assert_eq!(points[5], vec![(Axis::N, 20.0), (Axis::H, 0.3)]);
    }

    #[test]
    fn overrides_win_over_the_file() {
        let text = r#"{"model": {"kind": "curie_weiss", "n": 4, "beta": 0.5, "h": 0.1}}"#;
        let config = load(
            Some(("cfg.json", text)),
            &["model.beta=1.25".into(), "params.sizes=[10,20]".into()],
        )
        .unwrap();
        assert_eq!(
            config.model,
            ModelConfig::CurieWeiss {
                n: 4,
                beta: 1.25,
                h: 0.1
            }
        );
        assert_eq!(config.params.sizes, vec![10, 20]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "{\n  \"model\": {\"kind\": \"curie_weiss\", \"n\": 4, \"beta\": 0.5, \"h\": 0.1},\n  \"params\": {\"stepz\": 3}\n}";
        let err = load(Some(("cfg.json", text)), &[]).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("stepz"), "{err}");
    }

    #[test]
    fn sweep_validation() {
        let mut config = sample();
        assert!(validate(&config).is_ok());
        config.params.grid = Grid::default();
        assert!(validate(&config).is_err());
        config.params.grid.lambda = vec![0.1];
        assert!(validate(&config).is_err());
    }
}
