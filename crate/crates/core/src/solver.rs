//! Fixed-point solvers for the mean-field equation `m = tanh(h + Jm)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::SpinSystem;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Which sign sector a fixed point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
    Unspecified,
}

impl Branch {
    fn classify(m: &[f64]) -> Branch {
        let any_pos = m.iter().any(|&x| x > 0.0);
        let any_neg = m.iter().any(|&x| x < 0.0);
        match (any_pos, any_neg) {
            (true, false) => Branch::Positive,
            (false, true) => Branch::Negative,
            _ => Branch::Unspecified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub m_star: Vec<f64>,
    pub iterations: usize,
    /// ∞-norm of the last update.
    pub final_update_inf: f64,
    pub converged: bool,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl FixedPointOptions {
    /// Undamped when `‖J‖∞∞ < 1` (the map is then a contraction), damping 0.5 otherwise.
    pub fn for_system(system: &SpinSystem) -> Self {
        let damping = if system.norms().j_inf_inf < 1.0 { 1.0 } else { 0.5 };
        FixedPointOptions {
            damping,
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Damped iteration `m ← (1 - d)·m + d·tanh(h + Jm)` from `init`.
///
/// Running out of iterations is reported through `converged = false`.
pub fn fixed_point(system: &SpinSystem, init: &[f64], options: FixedPointOptions) -> Result<MeanFieldSolution> {
    fixed_point_observed(system, init, options, |_| {})
}

/// Same as [`fixed_point`], handing every iterate to `observe`.
pub fn fixed_point_observed(
    system: &SpinSystem,
    init: &[f64],
    options: FixedPointOptions,
    mut observe: impl FnMut(&[f64]),
) -> Result<MeanFieldSolution> {
    options.validate()?;
    let n = system.n();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: init.len(),
        });
    }
    if init.iter().any(|x| !(x.abs() <= 1.0)) {
        return Err(Error::domain("initial magnetizations must lie in [-1, 1]"));
    }

    let d = options.damping;
    let mut m = init.to_vec();
    let mut next = vec![0.0; n];
    let mut update = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        update = 0.0;
        for i in 0..n {
            let local: f64 = system.row(i).iter().zip(&m).map(|(j, x)| j * x).sum();
            let target = (system.fields()[i] + local).tanh();
            next[i] = if d == 1.0 {
                target
            } else {
                (1.0 - d) * m[i] + d * target
            };
            update = update.max((next[i] - m[i]).abs());
        }
        std::mem::swap(&mut m, &mut next);
        observe(&m);
        if update <= options.tol {
            break;
        }
    }

    Ok(MeanFieldSolution {
        branch: Branch::classify(&m),
        converged: update <= options.tol,
        m_star: m,
        iterations,
        final_update_inf: update,
    })
}

/// Solution of the scalar equation `m = tanh(h + βm)`.
///
/// For `h > 0` this is the unique positive root; for `h < 0` its mirror image.
/// At `h = 0` it is `0` when `β ≤ 1` and the positive root otherwise.
pub fn scalar_curie_weiss(h: f64, beta: f64) -> f64 {
    if h < 0.0 {
        return -scalar_curie_weiss(-h, beta);
    }
    if h == 0.0 && beta <= 1.0 {
        return 0.0;
    }
    let g = |m: f64| m - (h + beta * m).tanh();

    // g < 0 on the left end, g ≥ 0 at 1
    let mut lo = if h > 0.0 { 0.0 } else { f64::MIN_POSITIVE };
    let mut hi = 1.0;
    if g(hi) <= 0.0 {
        return 1.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }

    // Newton polish inside the bracket
    let mut m = 0.5 * (lo + hi);
    for _ in 0..50 {
        let t = (h + beta * m).tanh();
        let slope = 1.0 - beta * (1.0 - t * t);
        if slope == 0.0 {
            break;
        }
        let next = m - (m - t) / slope;
        if !(next > lo && next < hi) || (next - m).abs() <= 1e-16 * m.abs() {
            break;
        }
        m = next;
    }
    m
}

/// Fixed points reached from the initializations `+1`, `-1`, `0` and
/// `tanh(h)`, keeping converged solutions more than `10·tol` apart.
pub fn branch_scan(system: &SpinSystem, tol: f64, max_iter: usize) -> Result<Vec<MeanFieldSolution>> {
    let n = system.n();
    let options = FixedPointOptions {
        tol,
        max_iter,
        ..FixedPointOptions::for_system(system)
    };
    let inits = [
        vec![1.0; n],
        vec![-1.0; n],
        vec![0.0; n],
        system.fields().iter().map(|h| h.tanh()).collect(),
    ];
    let mut found: Vec<MeanFieldSolution> = Vec::new();
    for init in &inits {
        let solution = fixed_point(system, init, options)?;
        if !solution.converged {
            continue;
        }
        let duplicate = found.iter().any(|s| {
            s.m_star
                .iter()
                .zip(&solution.m_star)
                .all(|(a, b)| (a - b).abs() <= 10.0 * tol)
        });
        if !duplicate {
            found.push(solution);
        }
    }
    Ok(found)
}
