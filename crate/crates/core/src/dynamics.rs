//! Interpolation that switches off the couplings of site 0, the characteristic
//! curve along which its field is transported, and the inequalities that
//! control the magnetizations along that curve.
//!
//! Site 0 plays the distinguished role throughout; use
//! [`SpinSystem::with_site_first`] to study another site.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ExactOracle;
use crate::sampler::{glauber_estimate_with, SamplerOptions};
use crate::system::SpinSystem;

pub const DEFAULT_STEPS: usize = 200;

/// Slack allowed in the pointwise cumulant inequalities.
pub const LEMMA_SLACK: f64 = 1e-12;

/// Source of magnetizations `m(system)` along the curve.
pub trait MagnetizationProvider {
    fn magnetizations(&self, system: &SpinSystem) -> Result<Vec<f64>>;
}

/// Enumeration backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactProvider(pub ExactOracle);

impl MagnetizationProvider for ExactProvider {
    fn magnetizations(&self, system: &SpinSystem) -> Result<Vec<f64>> {
        Ok(self.0.gibbs_exact(system, false)?.m)
    }
}

/// Glauber backend. Only suitable for exploring the curve; the inequality
/// checks below always use enumeration.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlauberProvider(pub SamplerOptions);

impl MagnetizationProvider for GlauberProvider {
    fn magnetizations(&self, system: &SpinSystem) -> Result<Vec<f64>> {
        Ok(glauber_estimate_with(system, &self.0)?.m_hat)
    }
}

/// The system with every coupling to site 0 scaled by `t`.
pub fn interpolate(system: &SpinSystem, t: f64) -> Result<SpinSystem> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("interpolation time must lie in [0, 1], got {t}")));
    }
    if system.n() == 0 {
        return Err(Error::domain("cannot interpolate an empty system"));
    }
    let n = system.n();
    let mut couplings = system.couplings().to_vec();
    for j in 0..n {
        couplings[j] *= t;
        couplings[j * n] = couplings[j];
    }
    SpinSystem::new(couplings, system.fields().to_vec())
}

/// Couplings of site 0, `J₁`, taken from the uninterpolated system.
fn first_column(system: &SpinSystem) -> Vec<f64> {
    system.row(0).to_vec()
}

fn require_positive_fields(system: &SpinSystem) -> Result<f64> {
    if system.n() == 0 {
        return Err(Error::domain("empty system"));
    }
    let h_hat = system.norms().h_hat;
    if !(h_hat > 0.0) {
        return Err(Error::domain(format!(
            "needs strictly positive fields, min h = {h_hat}"
        )));
    }
    Ok(h_hat)
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicTrace {
    /// `1 = t_0 > t_1 > ... > t_steps = 0`
    pub times: Vec<f64>,
    pub w1_values: Vec<f64>,
    /// `J₁ᵀ m(t, w(t))`
    pub drift_values: Vec<f64>,
    pub m1_values: Vec<f64>,
    /// Full magnetization vector at each node.
    pub magnetizations: Vec<Vec<f64>>,
}

impl CharacteristicTrace {
    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    /// `w₁(0)`
    pub fn final_w1(&self) -> f64 {
        *self.w1_values.last().expect("trace has at least two nodes")
    }

    /// Trapezoid estimate of `∫₀¹ J₁ᵀm dt`.
    pub fn integrated_drift(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.drift_values.windows(2))
            .map(|(t, d)| (t[0] - t[1]) * 0.5 * (d[0] + d[1]))
            .sum()
    }
}

/// RK4 integration of `dw₁/dt = -J₁ᵀ m(t, w)` from `w(1) = h` back to `t = 0`,
/// with enumeration supplying `m`.
pub fn characteristic_curve(system: &SpinSystem, steps: usize) -> Result<CharacteristicTrace> {
    characteristic_curve_with(system, steps, &ExactProvider::default())
}

pub fn characteristic_curve_with(
    system: &SpinSystem,
    steps: usize,
    provider: &dyn MagnetizationProvider,
) -> Result<CharacteristicTrace> {
    require_positive_fields(system)?;
    if steps == 0 {
        return Err(Error::domain("the characteristic curve needs at least one step"));
    }
    let j1 = first_column(system);
    let evaluate = |t: f64, w1: f64| -> Result<(f64, Vec<f64>)> {
        let mut fields = system.fields().to_vec();
        fields[0] = w1;
        let m = provider.magnetizations(&interpolate(system, t)?.with_fields(fields)?)?;
        let drift = j1.iter().zip(&m).map(|(a, b)| a * b).sum();
        Ok((drift, m))
    };

    let dt = -1.0 / steps as f64;
    let mut trace = CharacteristicTrace {
        times: Vec::with_capacity(steps + 1),
        w1_values: Vec::with_capacity(steps + 1),
        drift_values: Vec::with_capacity(steps + 1),
        m1_values: Vec::with_capacity(steps + 1),
        magnetizations: Vec::with_capacity(steps + 1),
    };
    let mut w1 = system.fields()[0];
    for step in 0..=steps {
        let t = 1.0 - step as f64 / steps as f64;
        let (drift, m) = evaluate(t, w1)?;
        trace.times.push(t);
        trace.w1_values.push(w1);
        trace.drift_values.push(drift);
        trace.m1_values.push(m[0]);
        trace.magnetizations.push(m);
        if step == steps {
            break;
        }
        let k1 = -drift;
        let k2 = -evaluate(t + 0.5 * dt, w1 + 0.5 * dt * k1)?.0;
        let k3 = -evaluate(t + 0.5 * dt, w1 + 0.5 * dt * k2)?.0;
        let k4 = -evaluate((t + dt).max(0.0), w1 + dt * k3)?.0;
        w1 += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(trace)
}

/// Integration error allowance reported with the curve-based inequalities.
pub fn ode_allowance(steps: usize) -> f64 {
    10.0 * (steps as f64).powi(-4)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn check_direction(system: &SpinSystem, s: &[f64]) -> Result<()> {
    if s.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            got: s.len(),
        });
    }
    if s.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::domain("direction s must be finite and non-negative"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lemma1Check {
    /// `|∂_s m_k|`
    pub lhs1: f64,
    /// `‖s‖∞ m_k / ĥ`
    pub rhs1: f64,
    /// `|∂²m_k/∂h₁∂s|`
    pub lhs2: f64,
    /// `‖s‖∞ m_k / (ĥ h₁)`
    pub rhs2: f64,
}

impl Lemma1Check {
    pub fn holds(&self) -> bool {
        self.lhs1 <= self.rhs1 + LEMMA_SLACK && self.lhs2 <= self.rhs2 + LEMMA_SLACK
    }
}

/// Field derivatives of `m_k` in direction `s` at interpolation time `t`,
/// against their magnetization bounds.
pub fn verify_lemma1(system: &SpinSystem, s: &[f64], k: usize, t: f64) -> Result<Lemma1Check> {
    let h_hat = require_positive_fields(system)?;
    check_direction(system, s)?;
    system.check_site(k)?;
    let cumulants = ExactOracle::default().site_cumulants(&interpolate(system, t)?, 0)?;
    let scale = sup_norm(s) / h_hat;
    let m_k = cumulants.m[k];
    Ok(Lemma1Check {
        lhs1: cumulants.directional(k, s).abs(),
        rhs1: scale * m_k,
        lhs2: cumulants.mixed(k, s).abs(),
        rhs2: scale * m_k / system.fields()[0],
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lemma2Check {
    /// `max_t |sᵀm(h) - sᵀm(t, w(t))|` over the grid.
    pub sup_deviation: f64,
    /// `‖s‖∞/ĥ (‖J₁‖₁ + ln(1 + ‖J₁‖₁/ĥ))`
    pub bound: f64,
    pub ode_allowance: f64,
}

impl Lemma2Check {
    pub fn holds(&self) -> bool {
        self.sup_deviation <= self.bound + self.ode_allowance
    }
}

/// Drift of `sᵀm` along the characteristic curve.
pub fn verify_lemma2(system: &SpinSystem, s: &[f64], steps: usize) -> Result<Lemma2Check> {
    check_direction(system, s)?;
    let trace = characteristic_curve(system, steps)?;
    Ok(lemma2_from_trace(system, s, &trace, steps))
}

fn lemma2_from_trace(system: &SpinSystem, s: &[f64], trace: &CharacteristicTrace, steps: usize) -> Lemma2Check {
    let h_hat = system.norms().h_hat;
    let project = |m: &[f64]| -> f64 { s.iter().zip(m).map(|(a, b)| a * b).sum() };
    let start = project(&trace.magnetizations[0]);
    let sup_deviation = trace
        .magnetizations
        .iter()
        .map(|m| (project(m) - start).abs())
        .fold(0.0, f64::max);
    let j1_sum: f64 = system.row(0).iter().sum();
    Lemma2Check {
        sup_deviation,
        bound: sup_norm(s) / h_hat * (j1_sum + (1.0 + j1_sum / h_hat).ln()),
        ode_allowance: ode_allowance(steps),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FinalBoundCheck {
    /// `|m₁(h) - tanh(w₁(0))|`
    pub lhs: f64,
    /// `3‖J₁‖∞/ĥ`
    pub rhs: f64,
    pub ode_allowance: f64,
    /// `|m₁ - tanh(h₁ + J₁ᵀm)|`
    pub single_site_lhs: f64,
    /// `(‖J₁‖∞/ĥ)(3 + ‖J₁‖₁ + ln(1 + ‖J₁‖₁/ĥ))`
    pub single_site_rhs: f64,
}

impl FinalBoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.ode_allowance && self.single_site_lhs <= self.single_site_rhs
    }
}

/// Compares `m₁` with the decoupled magnetization at the end of the curve.
pub fn verify_final_bound(system: &SpinSystem, steps: usize) -> Result<FinalBoundCheck> {
    let trace = characteristic_curve(system, steps)?;
    Ok(final_bound_from_trace(system, &trace, steps))
}

fn final_bound_from_trace(system: &SpinSystem, trace: &CharacteristicTrace, steps: usize) -> FinalBoundCheck {
    let h_hat = system.norms().h_hat;
    let j1 = system.row(0);
    let j1_max = j1.iter().copied().fold(0.0, f64::max);
    let j1_sum: f64 = j1.iter().sum();
    let m = &trace.magnetizations[0];
    let mean_field = system.fields()[0] + j1.iter().zip(m).map(|(a, b)| a * b).sum::<f64>();
    FinalBoundCheck {
        lhs: (m[0] - trace.final_w1().tanh()).abs(),
        rhs: 3.0 * j1_max / h_hat,
        ode_allowance: ode_allowance(steps),
        single_site_lhs: (m[0] - mean_field.tanh()).abs(),
        single_site_rhs: j1_max / h_hat * (3.0 + j1_sum + (1.0 + j1_sum / h_hat).ln()),
    }
}

/// Both curve-based checks from a single integration.
pub fn verify_curve_bounds(system: &SpinSystem, s: &[f64], steps: usize) -> Result<(Lemma2Check, FinalBoundCheck)> {
    check_direction(system, s)?;
    let trace = characteristic_curve(system, steps)?;
    Ok((
        lemma2_from_trace(system, s, &trace, steps),
        final_bound_from_trace(system, &trace, steps),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportCheck {
    /// Central difference of `m(t, h)` in `t`.
    pub time_derivative: Vec<f64>,
    /// `m₁ ∂_{J₁}m + ∂²m/∂h₁∂J₁ + (J₁ᵀm) ∂m/∂h₁` from cumulants.
    pub transport: Vec<f64>,
}

impl TransportCheck {
    pub fn max_error(&self) -> f64 {
        self.time_derivative
            .iter()
            .zip(&self.transport)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Time derivative of `m(t, h)` against the transport equation, with
/// difference step `eps` (one-sided at the ends of `[0, 1]`).
pub fn transport_check(system: &SpinSystem, t: f64, eps: f64) -> Result<TransportCheck> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain("difference step must lie in (0, 1/2)"));
    }
    let oracle = ExactOracle::default();
    let cumulants = oracle.site_cumulants(&interpolate(system, t)?, 0)?;
    let n = system.n();
    let j1 = first_column(system);
    let drift: f64 = j1.iter().zip(&cumulants.m).map(|(a, b)| a * b).sum();
    let transport = (0..n)
        .map(|k| {
            cumulants.m[0] * cumulants.directional(k, &j1) + cumulants.mixed(k, &j1) + drift * cumulants.cov[k * n]
        })
        .collect();

    let (lo, hi) = ((t - eps).max(0.0), (t + eps).min(1.0));
    let m_lo = oracle.gibbs_exact(&interpolate(system, lo)?, false)?.m;
    let m_hi = oracle.gibbs_exact(&interpolate(system, hi)?, false)?.m;
    let time_derivative = m_lo.iter().zip(&m_hi).map(|(a, b)| (b - a) / (hi - lo)).collect();
    Ok(TransportCheck {
        time_derivative,
        transport,
    })
}

/// `(∂_{J₁}(sᵀm), ∂_s(J₁ᵀm))` at time `t`; equal by symmetry of the covariance.
pub fn directional_symmetry(system: &SpinSystem, s: &[f64], t: f64) -> Result<(f64, f64)> {
    check_direction(system, s)?;
    let cumulants = ExactOracle::default().site_cumulants(&interpolate(system, t)?, 0)?;
    let j1 = first_column(system);
    let n = system.n();
    let lhs = (0..n).map(|k| s[k] * cumulants.directional(k, &j1)).sum();
    let rhs = (0..n).map(|k| j1[k] * cumulants.directional(k, s)).sum();
    Ok((lhs, rhs))
}

/// `(|∂²m₁/∂h₁∂J₁|, 2|m₁ ∂_{J₁}m₁|)` at time `t`.
pub fn pivot_mixed_identity(system: &SpinSystem, t: f64) -> Result<(f64, f64)> {
    let cumulants = ExactOracle::default().site_cumulants(&interpolate(system, t)?, 0)?;
    let j1 = first_column(system);
    Ok((
        cumulants.mixed(0, &j1).abs(),
        2.0 * (cumulants.m[0] * cumulants.directional(0, &j1)).abs(),
    ))
}
