//! Generators for the standard model families and structural checks on them.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{curie_weiss_exact, ExactOracle};
use crate::sampler::{glauber_estimate_with, SamplerOptions};
use crate::system::SpinSystem;

/// `J_ij = β/n` off the diagonal, uniform field `h`.
pub fn curie_weiss(n: usize, beta: f64, h: f64) -> Result<SpinSystem> {
    if n == 0 {
        return Err(Error::domain("Curie-Weiss needs at least one site"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!(
            "beta must be finite and non-negative, got {beta}"
        )));
    }
    let c = beta / n as f64;
    let mut couplings = vec![c; n * n];
    for i in 0..n {
        couplings[i * n + i] = 0.0;
    }
    SpinSystem::new(couplings, vec![h; n])
}

/// `J_ij = w_i w_j` for `i ≠ j`.
pub fn rank_one(w: &[f64], h: f64) -> Result<SpinSystem> {
    if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::domain("rank-one weights must be finite and non-negative"));
    }
    let n = w.len();
    let mut couplings = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                couplings[i * n + j] = w[i] * w[j];
            }
        }
    }
    SpinSystem::new(couplings, vec![h; n])
}

/// Radial profile of a Kać kernel before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KacKernel {
    /// Standard normal density.
    Gaussian,
    /// Uniform density on the unit ball.
    UniformBall,
    /// Piecewise-linear radial profile through `(radii[k], values[k])`, zero
    /// beyond the last radius. Normalized numerically.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

impl KacKernel {
    fn profile(&self, r: f64) -> f64 {
        match self {
            KacKernel::Gaussian => (-0.5 * r * r).exp(),
            KacKernel::UniformBall => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KacKernel::Table { radii, values } => {
                if radii.is_empty() || r > radii[radii.len() - 1] {
                    return 0.0;
                }
                if r <= radii[0] {
                    return values[0];
                }
                let k = radii.partition_point(|&x| x < r);
                let (r0, r1) = (radii[k - 1], radii[k]);
                let t = (r - r0) / (r1 - r0);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
        }
    }

    /// Breakpoints of the profile's support, for piecewise quadrature.
    fn segments(&self) -> Vec<f64> {
        match self {
            KacKernel::Gaussian => vec![0.0, 12.0],
            KacKernel::UniformBall => vec![0.0, 1.0],
            KacKernel::Table { radii, .. } => {
                let mut s = vec![0.0];
                s.extend(radii.iter().copied().filter(|&r| r > 0.0));
                s
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let KacKernel::Table { radii, values } = self {
            if radii.is_empty() || radii.len() != values.len() {
                return Err(Error::domain("kernel table needs matching, non-empty radii and values"));
            }
            if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("kernel table radii must be non-negative and increasing"));
            }
            if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::domain("kernel table values must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// `∫_{R^d} profile(|x|) dx` in closed form, when available.
    fn analytic_mass(&self, d: usize) -> Option<f64> {
        match self {
            KacKernel::Gaussian => Some((2.0 * PI).powf(d as f64 / 2.0)),
            KacKernel::UniformBall => Some(PI.powf(d as f64 / 2.0) / gamma_half_integer(d + 2)),
            KacKernel::Table { .. } => None,
        }
    }

    /// `S_{d-1} ∫ profile(r) r^{d-1} dr` by composite Simpson on each segment.
    fn numeric_mass(&self, d: usize) -> f64 {
        const PANELS: usize = 2000;
        let segments = self.segments();
        let integrand = |r: f64| self.profile(r) * r.powi(d as i32 - 1);
        let mut total = 0.0;
        for w in segments.windows(2) {
            let (a, b) = (w[0], w[1]);
            let step = (b - a) / PANELS as f64;
            // evaluate just inside the segment so jumps at breakpoints are one-sided
            let inside = |r: f64| integrand(r.clamp(a + 1e-15 * b.max(1.0), b - 1e-15 * b.max(1.0)));
            let mut s = inside(a) + inside(b);
            for k in 1..PANELS {
                let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += weight * inside(a + k as f64 * step);
            }
            total += s * step / 3.0;
        }
        sphere_area(d) * total
    }
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half_integer(k: usize) -> f64 {
    let (mut value, mut x) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x + 1e-9 < k as f64 / 2.0 {
        value *= x;
        x += 1.0;
    }
    value
}

/// Surface area of the unit sphere in `R^d` (2 for `d = 1`).
fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

fn default_max_sites() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KacSpec {
    pub dimension: usize,
    pub box_side: usize,
    pub lambda: f64,
    pub beta: f64,
    pub h: f64,
    pub kernel: KacKernel,
    /// Largest `L^d` the dense generator accepts.
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

#[derive(Debug, Clone)]
pub struct KacSystem {
    pub system: SpinSystem,
    /// `|∫ f - 1|` of the normalized density, by quadrature.
    pub normalization_residual: f64,
    /// Site closest to the middle of the box.
    pub center_site: usize,
}

impl KacSpec {
    pub fn sites(&self) -> Option<usize> {
        self.box_side.checked_pow(self.dimension as u32)
    }

    /// Normalized density value at distance `r`.
    pub fn density(&self, r: f64) -> f64 {
        let mass = self
            .kernel
            .analytic_mass(self.dimension)
            .unwrap_or_else(|| self.kernel.numeric_mass(self.dimension));
        self.kernel.profile(r) / mass
    }
}

/// Kać interactions `J_ij = β λ^d f(λ(i - j))` on the box `{0..L-1}^d` with
/// free boundary and uniform field.
pub fn kac(spec: &KacSpec) -> Result<KacSystem> {
    let KacSpec {
        dimension: d,
        box_side,
        lambda,
        beta,
        h,
        ..
    } = *spec;
    if d == 0 || box_side == 0 {
        return Err(Error::domain("Kać box needs positive dimension and side length"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() || !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::domain("Kać scale must be positive and beta non-negative"));
    }
    spec.kernel.validate()?;
    let n = spec
        .sites()
        .filter(|&n| n <= spec.max_sites)
        .ok_or_else(|| Error::domain(format!("{box_side}^{d} sites exceed the budget of {}", spec.max_sites)))?;

    let numeric = spec.kernel.numeric_mass(d);
    let (mass, normalization_residual) = match spec.kernel.analytic_mass(d) {
        Some(exact) => (exact, (numeric / exact - 1.0).abs()),
        None => {
            if !(numeric > 0.0) {
                return Err(Error::domain("kernel table has zero mass"));
            }
            (numeric, (spec.kernel.numeric_mass(d) / numeric - 1.0).abs())
        }
    };

    let coords = |site: usize| -> Vec<usize> {
        let mut c = vec![0; d];
        let mut rest = site;
        for slot in c.iter_mut().rev() {
            *slot = rest % box_side;
            rest /= box_side;
        }
        c
    };
    let all: Vec<Vec<usize>> = (0..n).map(coords).collect();
    let prefactor = beta * lambda.powi(d as i32) / mass;
    let mut couplings = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r2: f64 = all[i]
                .iter()
                .zip(&all[j])
                .map(|(&a, &b)| {
                    let diff = lambda * (a as f64 - b as f64);
                    diff * diff
                })
                .sum();
            let value = prefactor * spec.kernel.profile(r2.sqrt());
            couplings[i * n + j] = value;
            couplings[j * n + i] = value;
        }
    }
    let center_site = (0..d).fold(0, |acc, _| acc * box_side + box_side / 2);
    Ok(KacSystem {
        system: SpinSystem::new(couplings, vec![h; n])?,
        normalization_residual,
        center_site,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilutedSpec {
    pub n: usize,
    pub beta: f64,
    pub p: f64,
    pub h: f64,
    pub seed: u64,
}

impl DilutedSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("diluted model needs at least one site"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::domain(format!(
                "dilution probability must lie in (0, 1], got {}",
                self.p
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::domain("beta must be finite and non-negative"));
        }
        Ok(())
    }

    fn strength(&self) -> f64 {
        self.beta / (self.n as f64 * self.p)
    }

    fn row_rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }

    /// Uniform draw deciding the edge `{i, j}`; keyed on `(seed, min, max)`.
    pub fn edge_uniform(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let mut rng = self.row_rng(a);
        // each f64 draw consumes two 32-bit words
        rng.set_word_pos(2 * (b - a - 1) as u128);
        rng.random::<f64>()
    }

    /// Row `i` of the coupling matrix, without building the others.
    pub fn row(&self, i: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if i >= self.n {
            return Err(Error::SiteOutOfRange { index: i, n: self.n });
        }
        let c = self.strength();
        let mut row: Vec<f64> = (0..i)
            .map(|j| if self.edge_uniform(j, i) < self.p { c } else { 0.0 })
            .collect();
        row.push(0.0);
        let mut rng = self.row_rng(i);
        row.extend(((i + 1)..self.n).map(|_| if rng.random::<f64>() < self.p { c } else { 0.0 }));
        Ok(row)
    }
}

/// Bernoulli-diluted Curie-Weiss model `J_ij = β/(np)·ε_ij`.
pub fn diluted(spec: &DilutedSpec) -> Result<SpinSystem> {
    spec.validate()?;
    let n = spec.n;
    let c = spec.strength();
    let mut couplings = vec![0.0; n * n];
    for i in 0..n {
        let mut rng = spec.row_rng(i);
        for j in (i + 1)..n {
            if rng.random::<f64>() < spec.p {
                couplings[i * n + j] = c;
                couplings[j * n + i] = c;
            }
        }
    }
    SpinSystem::new(couplings, vec![spec.h; n])
}

/// Outcome of the replica test of the weighted-average variance bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceCheck {
    pub replicas: usize,
    /// Sample variance of `J₁ᵀx - (β/n)Σx_i` across replicas.
    pub empirical: f64,
    /// `β²‖x‖∞²/(np)`
    pub bound: f64,
    /// `sqrt(2/(R-1))`, the relative standard error of a sample variance.
    pub relative_std_err: f64,
    pub holds: bool,
}

/// Samples the first row of independent diluted replicas (seeds
/// `base_seed, base_seed + 1, ...`) and compares the variance of
/// `J₁ᵀx - (β/n)Σx_i` with `β²‖x‖∞²/(np)`.
pub fn diluted_variance_check(spec: &DilutedSpec, x: &[f64], replicas: usize) -> Result<VarianceCheck> {
    spec.validate()?;
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: x.len(),
        });
    }
    if replicas < 2 {
        return Err(Error::domain("variance check needs at least two replicas"));
    }
    let mean_term = spec.beta / spec.n as f64 * x.iter().sum::<f64>();
    let samples: Vec<f64> = (0..replicas)
        .map(|r| {
            let replica = DilutedSpec {
                seed: spec.seed.wrapping_add(r as u64),
                ..*spec
            };
            let row = replica.row(0)?;
            Ok(row.iter().zip(x).map(|(j, xi)| j * xi).sum::<f64>() - mean_term)
        })
        .collect::<Result<_>>()?;
    let mean = samples.iter().sum::<f64>() / replicas as f64;
    let empirical = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicas - 1) as f64;
    let x_inf = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let bound = spec.beta * spec.beta * x_inf * x_inf / (spec.n as f64 * spec.p);
    let relative_std_err = (2.0 / (replicas - 1) as f64).sqrt();
    Ok(VarianceCheck {
        replicas,
        empirical,
        bound,
        relative_std_err,
        holds: empirical <= bound * (1.0 + 3.0 * relative_std_err),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

/// Perron-root enclosure for one connected component of the coupling graph.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentCertificate {
    pub sites: Vec<usize>,
    /// `min_i (Jv)_i / v_i` at the final iterate.
    pub lower: f64,
    /// `max_i (Jv)_i / v_i` at the final iterate.
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowTempReport {
    pub alpha: f64,
    pub verdict: Verdict,
    pub components: Vec<ComponentCertificate>,
}

impl LowTempReport {
    /// `Some(true)` when decided and satisfied, `None` when undecided.
    pub fn holds(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Holds => Some(true),
            Verdict::Fails => Some(false),
            Verdict::Undecided => None,
        }
    }

    /// Bracket on the spectral radius of the whole matrix.
    pub fn spectral_radius_bracket(&self) -> (f64, f64) {
        self.components
            .iter()
            .fold((0.0, 0.0), |(lo, hi), c| (f64::max(lo, c.lower), f64::max(hi, c.upper)))
    }
}

const PERRON_TOLERANCE: f64 = 1e-10;
const PERRON_MAX_ITER: usize = 200_000;

fn connected_components(system: &SpinSystem) -> Vec<Vec<usize>> {
    let n = system.n();
    let mut label = vec![usize::MAX; n];
    let mut components = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        label[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for (j, &c) in system.row(i).iter().enumerate() {
                if c > 0.0 && label[j] == usize::MAX {
                    label[j] = id;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

fn perron_bracket(system: &SpinSystem, sites: &[usize], alpha: f64) -> ComponentCertificate {
    let k = sites.len();
    let sub = |a: usize, b: usize| system.coupling(sites[a], sites[b]);
    let apply = |v: &[f64]| -> Vec<f64> { (0..k).map(|a| (0..k).map(|b| sub(a, b) * v[b]).sum()).collect() };
    let bracket = |v: &[f64], jv: &[f64]| {
        v.iter().zip(jv).fold((f64::INFINITY, 0.0_f64), |(lo, hi), (x, y)| {
            let r = y / x;
            (lo.min(r), hi.max(r))
        })
    };

    let mut v = vec![1.0; k];
    let mut jv = apply(&v);
    let (mut lower, mut upper) = bracket(&v, &jv);
    let mut iterations = 0;
    while upper - lower > PERRON_TOLERANCE * upper.max(1.0) && iterations < PERRON_MAX_ITER {
        iterations += 1;
        // the shift J + I keeps the iteration aperiodic on bipartite graphs
        let norm = v.iter().zip(&jv).map(|(x, y)| x + y).fold(0.0, f64::max);
        v = v.iter().zip(&jv).map(|(x, y)| (x + y) / norm).collect();
        jv = apply(&v);
        (lower, upper) = bracket(&v, &jv);
    }
    let converged = upper - lower <= PERRON_TOLERANCE * upper.max(1.0);
    let verdict = if lower >= alpha {
        Verdict::Holds
    } else if upper < alpha {
        Verdict::Fails
    } else {
        Verdict::Undecided
    };
    ComponentCertificate {
        sites: sites.to_vec(),
        lower,
        upper,
        iterations,
        converged,
        verdict,
    }
}

/// Decides whether every `x ≥ 0` has a site with `(Jx)_i ≥ α x_i`.
///
/// Equivalent to the Perron root of `J` being at least `α`; the root of each
/// connected component is enclosed by the Collatz-Wielandt ratios of a power
/// iterate, and those brackets form the certificate.
pub fn low_temp_condition(system: &SpinSystem, alpha: f64) -> Result<LowTempReport> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "alpha must be a finite number above 1, got {alpha}"
        )));
    }
    let components: Vec<ComponentCertificate> = connected_components(system)
        .iter()
        .map(|sites| perron_bracket(system, sites, alpha))
        .collect();
    let verdict = if components.iter().any(|c| c.verdict == Verdict::Holds) {
        Verdict::Holds
    } else if components.iter().all(|c| c.verdict == Verdict::Fails) {
        Verdict::Fails
    } else {
        Verdict::Undecided
    };
    Ok(LowTempReport {
        alpha,
        verdict,
        components,
    })
}

/// Field strength `‖J‖₁∞^{1/2 - δ}` used by the vanishing-field experiment.
pub fn prescribed_field(j_one_inf: f64, delta: f64) -> f64 {
    j_one_inf.powf(0.5 - delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnetizationMethod {
    Enumeration,
    SectorSum,
    Sampled,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositiveStateRow {
    pub n: usize,
    pub j_one_inf: f64,
    pub h_hat: f64,
    pub max_m: f64,
    /// Standard error of `max_m` when sampled.
    pub std_err: Option<f64>,
    pub method: MagnetizationMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositiveStateTable {
    pub family: String,
    pub delta: f64,
    pub rows: Vec<PositiveStateRow>,
}

impl PositiveStateTable {
    /// Smallest `max_i m_i` across the sizes.
    pub fn floor(&self) -> f64 {
        self.rows.iter().map(|r| r.max_m).fold(f64::INFINITY, f64::min)
    }

    /// True when `max_i m_i` never drops below `threshold`.
    pub fn bounded_away(&self, threshold: f64) -> bool {
        self.floor() >= threshold
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PositiveStateOptions {
    /// Systems up to this size are enumerated, larger ones sampled.
    pub exact_cap: usize,
    pub sampler: SamplerOptions,
}

impl Default for PositiveStateOptions {
    fn default() -> Self {
        PositiveStateOptions {
            exact_cap: 20,
            sampler: SamplerOptions::default(),
        }
    }
}

/// A size-indexed family of systems with field `ĥ = ‖J‖₁∞^{1/2-δ}`.
pub trait SystemFamily: Sync {
    fn name(&self) -> String;

    /// The size-`n` member, fields already set to the prescription.
    fn generate(&self, n: usize, delta: f64) -> Result<SpinSystem>;

    fn max_magnetization(&self, n: usize, delta: f64, options: &PositiveStateOptions) -> Result<PositiveStateRow> {
        let system = self.generate(n, delta)?;
        let norms = system.norms();
        let expected = prescribed_field(norms.j_one_inf, delta);
        let fields_ok = system
            .fields()
            .iter()
            .all(|&h| (h - expected).abs() <= 1e-9 * expected.abs().max(1e-300));
        if !fields_ok {
            return Err(Error::domain(format!(
                "family {} violates the field prescription at n = {n}: expected uniform h = {expected}, got min h = {}",
                self.name(),
                norms.h_hat
            )));
        }
        let (max_m, std_err, method) = if n <= options.exact_cap {
            let m = ExactOracle::with_cap(options.exact_cap).gibbs_exact(&system, false)?.m;
            (
                m.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                None,
                MagnetizationMethod::Enumeration,
            )
        } else {
            let est = glauber_estimate_with(&system, &options.sampler)?;
            let (site, max_m) = est
                .m_hat
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, m)| if m > acc.1 { (i, m) } else { acc },
                );
            (max_m, Some(est.std_err[site]), MagnetizationMethod::Sampled)
        };
        Ok(PositiveStateRow {
            n,
            j_one_inf: norms.j_one_inf,
            h_hat: norms.h_hat,
            max_m,
            std_err,
            method,
        })
    }
}

/// Curie-Weiss family, evaluated by the sector sum at any size.
#[derive(Debug, Clone, Copy)]
pub struct CurieWeissFamily {
    pub beta: f64,
}

impl SystemFamily for CurieWeissFamily {
    fn name(&self) -> String {
        format!("curie_weiss(beta={})", self.beta)
    }

    fn generate(&self, n: usize, delta: f64) -> Result<SpinSystem> {
        curie_weiss(n, self.beta, prescribed_field(self.beta / n as f64, delta))
    }

    fn max_magnetization(&self, n: usize, delta: f64, _options: &PositiveStateOptions) -> Result<PositiveStateRow> {
        if n < 2 {
            return Err(Error::domain("the Curie-Weiss family needs n ≥ 2"));
        }
        let j_one_inf = self.beta / n as f64;
        let h_hat = prescribed_field(j_one_inf, delta);
        let exact = curie_weiss_exact(n, self.beta, h_hat)?;
        Ok(PositiveStateRow {
            n,
            j_one_inf,
            h_hat,
            max_m: exact.m,
            std_err: None,
            method: MagnetizationMethod::SectorSum,
        })
    }
}

/// A family built from a closure `(n, δ) -> system`.
pub struct GeneratorFamily<F> {
    pub name: String,
    pub generator: F,
}

impl<F> SystemFamily for GeneratorFamily<F>
where
    F: Fn(usize, f64) -> Result<SpinSystem> + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn generate(&self, n: usize, delta: f64) -> Result<SpinSystem> {
        (self.generator)(n, delta)
    }
}

/// Tracks `max_i m_i` across sizes under the vanishing-field prescription.
pub fn positive_state_experiment(
    family: &dyn SystemFamily,
    sizes: &[usize],
    delta: f64,
    options: &PositiveStateOptions,
) -> Result<PositiveStateTable> {
    if sizes.is_empty() {
        return Err(Error::domain("positive-state experiment needs at least one size"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let rows = sizes
        .iter()
        .map(|&n| family.max_magnetization(n, delta, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(PositiveStateTable {
        family: family.name(),
        delta,
        rows,
    })
}
