use anyhow::Context;
use ferromf::dynamics::{
    characteristic_curve_with, ode_allowance, verify_curve_bounds, verify_lemma1, ExactProvider, GlauberProvider,
    MagnetizationProvider,
};
use ferromf::exact::{curie_weiss_exact, lee_yang_zeros, ExactOracle, SpinPolynomial};
use ferromf::io::{estimate_csv, system_to_value, trace_csv, zeros_csv};
use ferromf::models::{
    diluted, low_temp_condition, positive_state_experiment, prescribed_field, CurieWeissFamily, DilutedSpec,
    GeneratorFamily, PositiveStateOptions, SystemFamily,
};
use ferromf::sampler::{glauber_estimate_with, SamplerOptions};
use ferromf::{NormTriple, SpinSystem};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Axis, ConfigError, ExperimentConfig, ModelConfig, TaskKind, TaskParams};
use crate::model::build;
use crate::output::{num, opt, Table, TaskOutput};

const LEE_YANG_TOLERANCE: f64 = 1e-8;
const IDENTITY_TOLERANCE: f64 = 1e-10;

pub fn run(config: &ExperimentConfig, task: TaskKind) -> anyhow::Result<TaskOutput> {
    match task {
        TaskKind::Gen => gen(config),
        TaskKind::VerifyBound => verify_bound(config),
        TaskKind::ResidualSweep => residual_sweep(config),
        TaskKind::LeeYang => lee_yang(config),
        TaskKind::Characteristic => characteristic(config),
        TaskKind::Lemma1 => lemma1(config),
        TaskKind::Lemma2 => lemma2(config),
        TaskKind::Corederid => corederid(config),
        TaskKind::LowTemp => low_temp(config),
        TaskKind::PositiveState => positive_state(config),
        TaskKind::Sample => sample(config),
    }
}

fn sampler_options(config: &ExperimentConfig) -> SamplerOptions {
    SamplerOptions {
        sweeps: config.params.sweeps,
        burn_in: config.params.burn_in,
        seed: config.seed,
        estimator: config.params.estimator,
    }
}

fn system(config: &ExperimentConfig) -> anyhow::Result<SpinSystem> {
    Ok(build(&config.model, config.seed)?.system)
}

fn oracle(params: &TaskParams) -> ExactOracle {
    ExactOracle::with_cap(params.exact_cap)
}

fn gen(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let built = build(&config.model, config.seed)?;
    let mut doc = system_to_value(&built.system, config.params.matrix);
    if let (Some(center), Some(residual), Value::Object(map)) =
        (built.center_site, built.normalization_residual, &mut doc)
    {
        map.insert(
            "kac".into(),
            json!({"center_site": center, "normalization_residual": residual}),
        );
    }
    Ok(TaskOutput {
        json: doc,
        csv: None,
        violations: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Enumeration,
    SectorSum,
    Sampled,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Enumeration => "enumeration",
            Method::SectorSum => "sector_sum",
            Method::Sampled => "sampled",
        }
    }

    /// Sampled magnetizations carry noise, so their residuals are reported but never asserted.
    fn asserted(self) -> bool {
        self != Method::Sampled
    }
}

/// Residual of the mean-field equation against the bound at one model.
#[derive(Debug, Clone, Serialize)]
struct BoundPoint {
    method: Method,
    sites: usize,
    norms: NormTriple,
    residual_inf: f64,
    theorem_rhs: Option<f64>,
    ratio: Option<f64>,
    holds: Option<bool>,
    /// Largest per-site standard error when sampled.
    std_err: Option<f64>,
    /// Per-site magnetizations; a single entry when every site is equivalent.
    m: Vec<f64>,
    per_site_residuals: Vec<f64>,
}

impl BoundPoint {
    fn violated(&self) -> bool {
        self.method.asserted() && self.holds == Some(false)
    }
}

fn bound_point(
    model: &ModelConfig,
    params: &TaskParams,
    seed: u64,
    options: &SamplerOptions,
) -> anyhow::Result<BoundPoint> {
    if let ModelConfig::CurieWeiss { n, beta, h } = *model {
        if n > params.exact_cap {
            return curie_weiss_point(n, beta, h);
        }
    }
    let sys = build(model, seed)?.system;
    let (m, method, std_err) = if sys.n() <= params.exact_cap {
        (oracle(params).gibbs_exact(&sys, false)?.m, Method::Enumeration, None)
    } else {
        let est = glauber_estimate_with(&sys, options)?;
        let se = est.std_err.iter().copied().fold(0.0, f64::max);
        (est.m_hat, Method::Sampled, Some(se))
    };
    let report = sys.mf_residual(&m)?;
    Ok(BoundPoint {
        method,
        sites: sys.n(),
        norms: sys.norms(),
        residual_inf: report.residual_inf,
        theorem_rhs: report.theorem_rhs,
        ratio: report.ratio,
        holds: report.bound_holds(),
        std_err,
        m,
        per_site_residuals: report.per_site_residuals,
    })
}

/// Curie-Weiss beyond the enumeration cap: every site is equivalent, so one
/// sector sum gives the magnetization and the norms are known in closed form.
fn curie_weiss_point(n: usize, beta: f64, h: f64) -> anyhow::Result<BoundPoint> {
    let exact = curie_weiss_exact(n, beta, h)?;
    let nf = n as f64;
    let norms = NormTriple {
        h_hat: h,
        j_inf_inf: beta * (nf - 1.0) / nf,
        j_one_inf: if n > 1 { beta / nf } else { 0.0 },
    };
    let residual = (exact.m - (h + norms.j_inf_inf * exact.m).tanh()).abs();
    let rhs = norms.theorem_bound().ok();
    Ok(BoundPoint {
        method: Method::SectorSum,
        sites: n,
        norms,
        residual_inf: residual,
        theorem_rhs: rhs,
        ratio: rhs.filter(|b| *b > 0.0).map(|b| residual / b),
        holds: rhs.map(|b| residual <= b),
        std_err: None,
        m: vec![exact.m],
        per_site_residuals: vec![residual],
    })
}

fn bound_violation(label: &str, p: &BoundPoint) -> String {
    format!(
        "{label}: residual {} exceeds bound {}",
        num(p.residual_inf),
        opt(p.theorem_rhs)
    )
}

fn verify_bound(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let point = bound_point(&config.model, &config.params, config.seed, &sampler_options(config))?;
    let mut table = Table::new(&["site", "m", "residual"]);
    for (i, (m, r)) in point.m.iter().zip(&point.per_site_residuals).enumerate() {
        let site = if point.method == Method::SectorSum {
            "all".to_string()
        } else {
            i.to_string()
        };
        table.push(vec![site, num(*m), num(*r)]);
    }
    let violations = if point.violated() {
        vec![bound_violation("verify-bound", &point)]
    } else {
        Vec::new()
    };
    Ok(TaskOutput {
        json: serde_json::to_value(&point)?,
        csv: Some(table.render()),
        violations,
    })
}

fn residual_sweep(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let grid = &config.params.grid;
    let points = grid.points();
    if points.is_empty() || grid.active_axes().is_empty() {
        return Err(ConfigError("residual-sweep needs a non-empty params.grid".into()).into());
    }
    let options = sampler_options(config);
    // rayon keeps the input order, so rows come out in grid order however the
    // workers finish
    let results: Vec<anyhow::Result<BoundPoint>> = points
        .par_iter()
        .map(|point| {
            let model = point
                .iter()
                .fold(config.model.clone(), |m, &(axis, v)| m.with_axis(axis, v));
            bound_point(&model, &config.params, config.seed, &options)
        })
        .collect();

    let mut table = Table::new(&[
        "point",
        "n",
        "beta",
        "h",
        "p",
        "lambda",
        "sites",
        "method",
        "residual",
        "theorem_rhs",
        "ratio",
        "n_times_residual",
        "std_err",
        "error",
    ]);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (k, (point, result)) in points.iter().zip(&results).enumerate() {
        let value_of = |axis: Axis| -> String {
            point
                .iter()
                .find(|(a, _)| *a == axis)
                .map(|&(a, v)| {
                    if a == Axis::N {
                        format!("{}", v as usize)
                    } else {
                        num(v)
                    }
                })
                .unwrap_or_default()
        };
        let mut row: Vec<String> = vec![k.to_string()];
        row.extend(Axis::ALL.iter().map(|&a| value_of(a)));
        match result {
            Ok(p) => {
                row.extend([
                    p.sites.to_string(),
                    p.method.name().to_string(),
                    num(p.residual_inf),
                    opt(p.theorem_rhs),
                    opt(p.ratio),
                    num(p.sites as f64 * p.residual_inf),
                    opt(p.std_err),
                    String::new(),
                ]);
                if p.violated() {
                    violations.push(bound_violation(&format!("point {k}"), p));
                }
                rows.push(json!({"point": k, "result": p}));
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(format!("{e:#}"));
                rows.push(json!({"point": k, "error": format!("{e:#}")}));
            }
        }
        table.push(row);
    }
    Ok(TaskOutput {
        json: Value::Array(rows),
        csv: Some(table.render()),
        violations,
    })
}

fn lee_yang(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let sys = system(config)?;
    let tolerance = config.params.tolerance.unwrap_or(LEE_YANG_TOLERANCE);
    let zeros = lee_yang_zeros(&sys)?;
    let mut violations = Vec::new();
    if !(zeros.max_modulus_deviation < tolerance) {
        violations.push(format!(
            "lee-yang: max | |z| - 1 | = {} is not below {}",
            num(zeros.max_modulus_deviation),
            num(tolerance)
        ));
    }
    Ok(TaskOutput {
        json: serde_json::to_value(&zeros)?,
        csv: Some(zeros_csv(&zeros)),
        violations,
    })
}

/// The system relabeled so that `params.site` is site 0, and the map from new
/// labels back to the original ones.
fn relabeled(config: &ExperimentConfig) -> anyhow::Result<(SpinSystem, impl Fn(usize) -> usize)> {
    let site = config.params.site;
    let sys = system(config)?.with_site_first(site)?;
    let original = move |k: usize| match k {
        0 => site,
        k if k == site => 0,
        k => k,
    };
    Ok((sys, original))
}

/// Direction `s` in the relabeled system; defaults to the couplings of site 0.
fn direction(
    config: &ExperimentConfig,
    sys: &SpinSystem,
    original: &impl Fn(usize) -> usize,
) -> anyhow::Result<Vec<f64>> {
    match &config.params.direction {
        Some(s) => {
            if s.len() != sys.n() {
                return Err(ConfigError(format!(
                    "params.direction has {} entries but the system has {} sites",
                    s.len(),
                    sys.n()
                ))
                .into());
            }
            Ok((0..sys.n()).map(|k| s[original(k)]).collect())
        }
        None => Ok(sys.row(0).to_vec()),
    }
}

fn characteristic(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let (sys, _) = relabeled(config)?;
    let params = &config.params;
    let exact = sys.n() <= params.exact_cap;
    let provider: Box<dyn MagnetizationProvider> = if exact {
        Box::new(ExactProvider(oracle(params)))
    } else {
        Box::new(GlauberProvider(sampler_options(config)))
    };
    let trace = characteristic_curve_with(&sys, params.steps, provider.as_ref())?;
    let allowance = ode_allowance(params.steps);

    // with non-negative magnetizations w₁ can only grow as t runs back to 0
    let mut violations = Vec::new();
    if exact {
        for k in 1..trace.nodes() {
            if trace.w1_values[k] < trace.w1_values[k - 1] - allowance {
                violations.push(format!(
                    "characteristic: w1 decreases from {} at t = {} to {} at t = {}",
                    num(trace.w1_values[k - 1]),
                    num(trace.times[k - 1]),
                    num(trace.w1_values[k]),
                    num(trace.times[k])
                ));
            }
        }
    }
    Ok(TaskOutput {
        json: json!({
            "site": params.site,
            "method": if exact { Method::Enumeration } else { Method::Sampled },
            "steps": params.steps,
            "ode_allowance": allowance,
            "final_w1": trace.final_w1(),
            "integrated_drift": trace.integrated_drift(),
            "t": trace.times,
            "w1": trace.w1_values,
            "drift": trace.drift_values,
            "m1": trace.m1_values,
        }),
        csv: Some(trace_csv(&trace)),
        violations,
    })
}

fn lemma1(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let (sys, original) = relabeled(config)?;
    let s = direction(config, &sys, &original)?;
    let mut table = Table::new(&["t", "site", "lhs1", "rhs1", "lhs2", "rhs2", "holds"]);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &t in &config.params.times {
        for k in 0..sys.n() {
            let c = verify_lemma1(&sys, &s, k, t)?;
            let site = original(k);
            table.push(vec![
                num(t),
                site.to_string(),
                num(c.lhs1),
                num(c.rhs1),
                num(c.lhs2),
                num(c.rhs2),
                c.holds().to_string(),
            ]);
            if !c.holds() {
                violations.push(format!(
                    "lemma1 at t = {}, site {site}: |d_s m| = {} vs {}, |d2 m| = {} vs {}",
                    num(t),
                    num(c.lhs1),
                    num(c.rhs1),
                    num(c.lhs2),
                    num(c.rhs2)
                ));
            }
            rows.push(json!({"t": t, "site": site, "check": c, "holds": c.holds()}));
        }
    }
    Ok(TaskOutput {
        json: Value::Array(rows),
        csv: Some(table.render()),
        violations,
    })
}

fn lemma2(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let (sys, original) = relabeled(config)?;
    let s = direction(config, &sys, &original)?;
    let (drift, fin) = verify_curve_bounds(&sys, &s, config.params.steps)?;
    let checks = [
        ("lemma2", drift.sup_deviation, drift.bound, drift.ode_allowance),
        ("final_bound", fin.lhs, fin.rhs, fin.ode_allowance),
        ("single_site", fin.single_site_lhs, fin.single_site_rhs, 0.0),
    ];
    let mut table = Table::new(&["check", "lhs", "rhs", "allowance", "holds"]);
    let mut violations = Vec::new();
    for (name, lhs, rhs, allowance) in checks {
        let holds = lhs <= rhs + allowance;
        table.push(vec![name.into(), num(lhs), num(rhs), num(allowance), holds.to_string()]);
        if !holds {
            violations.push(format!(
                "{name}: {} exceeds {} + {}",
                num(lhs),
                num(rhs),
                num(allowance)
            ));
        }
    }
    Ok(TaskOutput {
        json: json!({
            "site": config.params.site,
            "steps": config.params.steps,
            "lemma2": drift,
            "lemma2_holds": drift.holds(),
            "final_bound": fin,
            "final_bound_holds": fin.holds(),
        }),
        csv: Some(table.render()),
        violations,
    })
}

fn corederid(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let sys = system(config)?;
    let params = &config.params;
    let tolerance = params.tolerance.unwrap_or(IDENTITY_TOLERANCE);
    let observable = params
        .observable
        .clone()
        .unwrap_or_else(|| SpinPolynomial::single_spin(params.site));
    if let Some(k) = observable.max_site().filter(|&k| k >= sys.n()) {
        return Err(ConfigError(format!("observable uses site {k} but the system has {} sites", sys.n())).into());
    }
    let n = sys.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let oracle = oracle(params);
    let mut table = Table::new(&["i", "j", "lhs", "rhs", "abs_diff"]);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (i, j) in pairs {
        let (lhs, rhs) = oracle.coupling_identity_check(&sys, |s: &[i8]| observable.evaluate(s), i, j)?;
        let diff = (lhs - rhs).abs();
        table.push(vec![i.to_string(), j.to_string(), num(lhs), num(rhs), num(diff)]);
        if !(diff <= tolerance * lhs.abs().max(1.0)) {
            violations.push(format!(
                "corederid ({i}, {j}): d<f>/dJ = {} but the field-derivative side is {}",
                num(lhs),
                num(rhs)
            ));
        }
        rows.push(json!({"i": i, "j": j, "lhs": lhs, "rhs": rhs}));
    }
    Ok(TaskOutput {
        json: json!({"observable": observable, "tolerance": tolerance, "pairs": rows}),
        csv: Some(table.render()),
        violations,
    })
}

fn low_temp(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let sys = system(config)?;
    let report = low_temp_condition(&sys, config.params.alpha)?;
    let mut table = Table::new(&[
        "component",
        "size",
        "lower",
        "upper",
        "iterations",
        "converged",
        "verdict",
    ]);
    for (k, c) in report.components.iter().enumerate() {
        let verdict = serde_json::to_value(c.verdict)?;
        table.push(vec![
            k.to_string(),
            c.sites.len().to_string(),
            num(c.lower),
            num(c.upper),
            c.iterations.to_string(),
            c.converged.to_string(),
            verdict.as_str().unwrap_or_default().to_string(),
        ]);
    }
    Ok(TaskOutput {
        json: serde_json::to_value(&report)?,
        csv: Some(table.render()),
        violations: Vec::new(),
    })
}

fn positive_state(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let params = &config.params;
    let options = PositiveStateOptions {
        exact_cap: params.exact_cap,
        sampler: sampler_options(config),
    };
    let table = match config.model {
        ModelConfig::CurieWeiss { beta, .. } => {
            positive_state_experiment(&CurieWeissFamily { beta }, &params.sizes, params.delta, &options)?
        }
        ModelConfig::Diluted { beta, p, seed, .. } => {
            let seed = seed.unwrap_or(config.seed);
            let family = GeneratorFamily {
                name: format!("diluted(beta={beta}, p={p}, seed={seed})"),
                generator: move |n: usize, delta: f64| {
                    let sys = diluted(&DilutedSpec {
                        n,
                        beta,
                        p,
                        h: 0.0,
                        seed,
                    })?;
                    let h = prescribed_field(sys.norms().j_one_inf, delta);
                    sys.with_uniform_field(h)
                },
            };
            positive_state_experiment(&family as &dyn SystemFamily, &params.sizes, params.delta, &options)?
        }
        _ => {
            return Err(ConfigError("positive-state needs a size-indexed model: curie_weiss or diluted".into()).into())
        }
    };
    let mut csv = Table::new(&["n", "j_one_inf", "h_hat", "max_m", "std_err", "method"]);
    for r in &table.rows {
        let method = serde_json::to_value(r.method)?;
        csv.push(vec![
            r.n.to_string(),
            num(r.j_one_inf),
            num(r.h_hat),
            num(r.max_m),
            opt(r.std_err),
            method.as_str().unwrap_or_default().to_string(),
        ]);
    }
    Ok(TaskOutput {
        json: json!({
            "table": table,
            "floor": table.floor(),
            "threshold": params.threshold,
            "bounded_away": table.bounded_away(params.threshold),
        }),
        csv: Some(csv.render()),
        violations: Vec::new(),
    })
}

fn sample(config: &ExperimentConfig) -> anyhow::Result<TaskOutput> {
    let sys = system(config)?;
    let est = glauber_estimate_with(&sys, &sampler_options(config)).context("running the sampler")?;
    Ok(TaskOutput {
        json: serde_json::to_value(&est)?,
        csv: Some(estimate_csv(&est)),
        violations: Vec::new(),
    })
}
