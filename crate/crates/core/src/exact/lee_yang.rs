//! Zeros of the partition function in the fugacity `ζ = e^{-2h}`.
//!
//! With a uniform field `h`, `Z = e^{nh} Σ_k c_k ζ^k` where `c_k` sums the
//! zero-field Boltzmann weights of configurations with exactly `k` spins down.
//! For ferromagnetic couplings every zero lies on the unit circle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::ExactOracle;
use crate::error::{Error, Result};
use crate::numerics::{ComplexDd, DoubleDouble};
use crate::system::SpinSystem;

pub const LEE_YANG_CAP: usize = 16;

const MAX_POLISH_ITERATIONS: usize = 200;
const POLISH_TOLERANCE: f64 = 1e-28;

#[derive(Debug, Clone, Serialize)]
pub struct LeeYangZeros {
    pub zeros: Vec<Complex64>,
    /// `max_k | |ζ_k| - 1 |`
    pub max_modulus_deviation: f64,
    /// `ln c_k` for `k = 0..=n`.
    pub log_coefficients: Vec<f64>,
}

/// Locates the fugacity zeros of `system`. Fields are ignored.
///
/// Roots come from the companion-matrix eigenvalues and are then polished
/// simultaneously (Aberth iteration) in double-double arithmetic.
pub fn lee_yang_zeros(system: &SpinSystem) -> Result<LeeYangZeros> {
    let n = system.n();
    if n > LEE_YANG_CAP {
        return Err(Error::TooLarge { n, cap: LEE_YANG_CAP });
    }
    let log_coefficients = log_coefficients(system)?;

    // scale so the largest coefficient is 1
    let max = log_coefficients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let coefficients: Vec<f64> = log_coefficients.iter().map(|c| (c - max).exp()).collect();

    let initial = companion_roots(&coefficients);
    let zeros_dd = aberth_polish(&coefficients, initial);

    let max_modulus_deviation = zeros_dd
        .iter()
        .map(|z| z.abs().sub(DoubleDouble::ONE).to_f64().abs())
        .fold(0.0, f64::max);
    let zeros = zeros_dd
        .iter()
        .map(|z| {
            let (re, im) = z.to_f64();
            Complex64::new(re, im)
        })
        .collect();

    Ok(LeeYangZeros {
        zeros,
        max_modulus_deviation,
        log_coefficients,
    })
}

/// `ln c_k`, symmetrized so that `c_k = c_{n-k}` holds exactly (global spin
/// flip maps `k` down-spins to `n - k`).
fn log_coefficients(system: &SpinSystem) -> Result<Vec<f64>> {
    let n = system.n();
    let zero_field = system.with_uniform_field(0.0)?;
    let acc = ExactOracle::with_cap(LEE_YANG_CAP).accumulate(&zero_field, n + 1, |sigma, w, sums| {
        let down = sigma.iter().filter(|&&s| s < 0).count();
        sums[down] += w;
    })?;
    let scale = acc.log_total();
    let fractions = acc.means();
    let raw: Vec<f64> = fractions.iter().map(|f| f.ln() + scale).collect();
    Ok((0..=n)
        .map(|k| {
            let (a, b) = (raw[k], raw[n - k]);
            let hi = a.max(b);
            hi + (0.5 * ((a - hi).exp() + (b - hi).exp())).ln()
        })
        .collect())
}

/// Eigenvalues of the companion matrix of `Σ_k a_k ζ^k`.
fn companion_roots(coefficients: &[f64]) -> Vec<Complex64> {
    let degree = coefficients.len() - 1;
    let lead = coefficients[degree];
    let companion = DMatrix::from_fn(degree, degree, |row, col| {
        if row == 0 {
            -coefficients[degree - 1 - col] / lead
        } else if row == col + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().copied().collect()
}

/// `(p(z), p'(z))` by Horner's rule.
fn horner(coefficients: &[f64], z: ComplexDd) -> (ComplexDd, ComplexDd) {
    let mut p = ComplexDd::ZERO;
    let mut dp = ComplexDd::ZERO;
    for &c in coefficients.iter().rev() {
        dp = dp.mul(z).add(p);
        p = p.mul(z).add(ComplexDd::new(c, 0.0));
    }
    (p, dp)
}

fn aberth_polish(coefficients: &[f64], initial: Vec<Complex64>) -> Vec<ComplexDd> {
    let mut roots: Vec<ComplexDd> = initial.iter().map(|z| ComplexDd::new(z.re, z.im)).collect();
    let one = ComplexDd::new(1.0, 0.0);
    for _ in 0..MAX_POLISH_ITERATIONS {
        let mut largest_step = 0.0_f64;
        for k in 0..roots.len() {
            let z = roots[k];
            let (p, dp) = horner(coefficients, z);
            if p.norm_sqr().to_f64() == 0.0 {
                continue;
            }
            let newton = p.div(dp);
            let mut repulsion = ComplexDd::ZERO;
            for (j, &other) in roots.iter().enumerate() {
                if j != k {
                    repulsion = repulsion.add(one.div(z.sub(other)));
                }
            }
            let step = newton.div(one.sub(newton.mul(repulsion)));
            roots[k] = z.sub(step);
            let size = step.abs().to_f64() / z.abs().to_f64().max(1.0);
            largest_step = largest_step.max(size);
        }
        if largest_step < POLISH_TOLERANCE {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_free_spin_has_root_at_minus_one() {
        let sys = SpinSystem::decoupled(vec![0.4]).unwrap();
        let ly = lee_yang_zeros(&sys).unwrap();
        assert_eq!(ly.zeros.len(), 1);
        assert!((ly.zeros[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(ly.max_modulus_deviation, 0.0);
        assert!(ly.log_coefficients.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn two_spin_roots_match_quadratic_formula() {
        let j: f64 = 0.5;
        let sys = SpinSystem::new(vec![0.0, j, j, 0.0], vec![0.0, 0.0]).unwrap();
        let ly = lee_yang_zeros(&sys).unwrap();
        // e^J + 2e^{-J} ζ + e^J ζ² = 0
        let b = 2.0 * (-j).exp() / j.exp();
        let disc = (b * b - 4.0).abs().sqrt();
        let expected = [
            Complex64::new(-b / 2.0, disc / 2.0),
            Complex64::new(-b / 2.0, -disc / 2.0),
        ];
        for e in expected {
            assert!(ly.zeros.iter().any(|z| (z - e).norm() < 1e-14));
        }
        assert!(ly.max_modulus_deviation < 1e-15);
        let product = ly.zeros[0] * ly.zeros[1];
        assert!((product - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((ly.log_coefficients[0] - j).abs() < 1e-14);
        assert!((ly.log_coefficients[1] - ((2.0f64).ln() - j)).abs() < 1e-14);
    }

    #[test]
    #[allow(clippy::excessive_precision)] // reference digits kept as printed
    fn six_spin_zeros_match_high_precision_roots() {
        let n = 6;
        let c: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if i == j {
                    0.0
                } else {
                    (i + j + 1) as f64 / 10.0
                }
            })
            .collect();
        let sys = SpinSystem::new(c, vec![0.0; n]).unwrap();
        let ly = lee_yang_zeros(&sys).unwrap();
        let expected = [
            (-0.86863595899835854472, 0.49545087620772452638),
            (-0.010932027940442537477, 0.99994024359714085051),
            (0.86307455925695594936, 0.5050765339663002336),
        ];
        for (re, im) in expected {
            for z in [Complex64::new(re, im), Complex64::new(re, -im)] {
                assert!(ly.zeros.iter().any(|w| (w - z).norm() < 1e-12), "missing {z}");
            }
        }
        assert!(ly.max_modulus_deviation < 1e-15);
    }

    #[test]
    fn antiferromagnetic_input_leaves_the_unit_circle() {
        let sys = SpinSystem::from_parts_unchecked(vec![0.0, -1.0, -1.0, 0.0], vec![0.0, 0.0]);
        let ly = lee_yang_zeros(&sys).unwrap();
        assert!(ly.max_modulus_deviation > 1.0);
    }

    #[test]
    fn rejects_large_systems() {
        let sys = SpinSystem::decoupled(vec![0.0; LEE_YANG_CAP + 1]).unwrap();
        assert!(matches!(lee_yang_zeros(&sys), Err(Error::TooLarge { .. })));
    }
}
