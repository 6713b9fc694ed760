//! Ferromagnetic spin systems, their norms, and the finite-volume residual bound.
//!
//! A system on `n` sites carries a symmetric, entrywise non-negative coupling
//! matrix `J` (stored dense, row-major, inverse temperature absorbed) and a
//! field vector `h`. The energy of a configuration `σ ∈ {-1, +1}^n` is
//!
//! ```text
//! H(σ) = -½ Σ_ij J_ij σ_i σ_j - Σ_i h_i σ_i
//! ```
//!
//! with the double sum running over ordered pairs, so a symmetric pair
//! contributes `J_ij σ_i σ_j` once in total.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};

/// Entries of `J` and `J^T` may differ by at most this much before a matrix
/// is rejected as asymmetric. Accepted matrices are symmetrized exactly.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    n: usize,
    couplings: Vec<f64>,
    fields: Vec<f64>,
}

impl SpinSystem {
    /// Builds a system from a row-major `n × n` coupling matrix and a field vector.
    ///
    /// Diagonal couplings only shift the energy by a constant (`σ_i² = 1`) and
    /// are zeroed with a warning.
    pub fn new(couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        let n = fields.len();
        if n == 0 {
            return Err(Error::domain("a spin system needs at least one site"));
        }
        if couplings.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: couplings.len(),
            });
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::NonFinite("fields"));
        }
        if couplings.iter().any(|j| !j.is_finite()) {
            return Err(Error::NonFinite("couplings"));
        }

        let mut couplings = couplings;
        let mut zeroed_diagonal = false;
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                zeroed_diagonal = true;
                couplings[i * n + i] = 0.0;
            }
            for j in 0..n {
                let value = couplings[i * n + j];
                if value < 0.0 {
                    return Err(Error::NegativeCoupling { i, j, value });
                }
            }
            for j in (i + 1)..n {
                let forward = couplings[i * n + j];
                let backward = couplings[j * n + i];
                if (forward - backward).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Asymmetric {
                        i,
                        j,
                        forward,
                        backward,
                    });
                }
                let mean = 0.5 * (forward + backward);
                couplings[i * n + j] = mean;
                couplings[j * n + i] = mean;
            }
        }
        if zeroed_diagonal {
            warn!("diagonal couplings only shift the energy and were set to zero");
        }

        Ok(SpinSystem { n, couplings, fields })
    }

    /// Builds a system from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], fields: Vec<f64>) -> Result<Self> {
        let n = fields.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::new(flat, fields)
    }

    /// Builds a system from upper-triangle `(i, j, value)` triples, `i < j`.
    pub fn from_upper_triples(
        fields: Vec<f64>,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = fields.len();
        let mut flat = vec![0.0; n * n];
        for (i, j, value) in triples {
            if i >= n {
                return Err(Error::SiteOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::SiteOutOfRange { index: j, n });
            }
            if i > j {
                return Err(Error::Format(format!(
                    "entry ({i}, {j}) lies below the diagonal; only the upper triangle is stored"
                )));
            }
            flat[i * n + j] = value;
            flat[j * n + i] = value;
        }
        Self::new(flat, fields)
    }

    /// A system of `n` independent spins in the given field.
    pub fn decoupled(fields: Vec<f64>) -> Result<Self> {
        let n = fields.len();
        Self::new(vec![0.0; n * n], fields)
    }

    /// Skips every invariant check. Only meant for negative controls such as
    /// antiferromagnetic inputs to the Lee-Yang locator.
    #[doc(hidden)]
    pub fn from_parts_unchecked(couplings: Vec<f64>, fields: Vec<f64>) -> Self {
        assert_eq!(couplings.len(), fields.len() * fields.len());
        SpinSystem {
            n: fields.len(),
            couplings,
            fields,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    /// Row `i` of `J`; equal to column `i` by symmetry.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    /// Row-major coupling matrix.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn with_fields(&self, fields: Vec<f64>) -> Result<Self> {
        if fields.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: fields.len(),
            });
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::NonFinite("fields"));
        }
        Ok(SpinSystem {
            n: self.n,
            couplings: self.couplings.clone(),
            fields,
        })
    }

    pub fn with_uniform_field(&self, h: f64) -> Result<Self> {
        self.with_fields(vec![h; self.n])
    }

    /// Multiplies every coupling by `factor ≥ 0`.
    pub fn scaled_couplings(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::domain(format!(
                "coupling scale must be finite and non-negative, got {factor}"
            )));
        }
        Ok(SpinSystem {
            n: self.n,
            couplings: self.couplings.iter().map(|j| j * factor).collect(),
            fields: self.fields.clone(),
        })
    }

    /// Relabels sites so that `site` becomes site 0 (swapping it with site 0).
    pub fn with_site_first(&self, site: usize) -> Result<Self> {
        if site >= self.n {
            return Err(Error::SiteOutOfRange { index: site, n: self.n });
        }
        let n = self.n;
        let label = |k: usize| match k {
            0 => site,
            k if k == site => 0,
            k => k,
        };
        let mut couplings = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                couplings[i * n + j] = self.coupling(label(i), label(j));
            }
        }
        let fields = (0..n).map(|i| self.fields[label(i)]).collect();
        Ok(SpinSystem { n, couplings, fields })
    }

    /// `J m`.
    pub fn apply_couplings(&self, m: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(m).map(|(j, x)| j * x).sum())
            .collect()
    }

    /// Energy `H(σ)` of a `±1` configuration.
    pub fn hamiltonian(&self, sigma: &[i8]) -> Result<f64> {
        self.check_spins(sigma)?;
        let mut pair = 0.0;
        let mut field = 0.0;
        for i in 0..self.n {
            let si = f64::from(sigma[i]);
            let local: f64 = self.row(i).iter().zip(sigma).map(|(j, &s)| j * f64::from(s)).sum();
            pair += si * local;
            field += self.fields[i] * si;
        }
        Ok(-0.5 * pair - field)
    }

    pub(crate) fn check_spins(&self, sigma: &[i8]) -> Result<()> {
        if sigma.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: sigma.len(),
            });
        }
        if let Some((site, &value)) = sigma.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidSpin { site, value });
        }
        Ok(())
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            Err(Error::SiteOutOfRange { index: site, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn norms(&self) -> NormTriple {
        let n = self.n;
        let h_hat = self.fields.iter().copied().fold(f64::INFINITY, f64::min);
        let mut j_inf_inf = 0.0_f64;
        let mut j_one_inf = 0.0_f64;
        for col in 0..n {
            let mut sum = 0.0;
            for row in 0..n {
                let value = self.couplings[row * n + col];
                sum += value;
                j_one_inf = j_one_inf.max(value);
            }
            j_inf_inf = j_inf_inf.max(sum);
        }
        NormTriple {
            h_hat,
            j_inf_inf,
            j_one_inf,
        }
    }

    /// Residual of the mean-field equation `m = tanh(h + Jm)` at `m`, together
    /// with the residual bound when the smallest field is positive.
    pub fn mf_residual(&self, m: &[f64]) -> Result<BoundReport> {
        if m.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: m.len(),
            });
        }
        if m.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(Error::domain("magnetizations must lie in [-1, 1]"));
        }
        let jm = self.apply_couplings(m);
        let per_site_residuals: Vec<f64> = m
            .iter()
            .zip(&jm)
            .zip(&self.fields)
            .map(|((mi, jmi), hi)| mi - (hi + jmi).tanh())
            .collect();
        let residual_inf = per_site_residuals.iter().fold(0.0_f64, |acc, r| acc.max(r.abs()));
        let theorem_rhs = self.norms().theorem_bound().ok();
        let ratio = theorem_rhs.filter(|&b| b > 0.0).map(|b| residual_inf / b);
        Ok(BoundReport {
            residual_inf,
            theorem_rhs,
            ratio,
            per_site_residuals,
        })
    }
}

/// Smallest field and the two coupling norms entering the residual bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormTriple {
    /// `min_i h_i`
    pub h_hat: f64,
    /// Largest column sum of `J`.
    pub j_inf_inf: f64,
    /// Largest entry of `J`.
    pub j_one_inf: f64,
}

impl NormTriple {
    /// `(‖J‖₁∞ / ĥ) · (3 + ‖J‖∞∞ + ln(1 + ‖J‖∞∞ / ĥ))`.
    ///
    /// Undefined unless `ĥ > 0`.
    pub fn theorem_bound(&self) -> Result<f64> {
        let NormTriple {
            h_hat,
            j_inf_inf,
            j_one_inf,
        } = *self;
        if !(h_hat > 0.0) {
            return Err(Error::domain(format!(
                "the residual bound needs a strictly positive minimal field, got {h_hat}"
            )));
        }
        Ok((j_one_inf / h_hat) * (3.0 + j_inf_inf + (1.0 + j_inf_inf / h_hat).ln()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// `‖m - tanh(h + Jm)‖∞`
    pub residual_inf: f64,
    /// `None` when the bound is undefined (`ĥ ≤ 0`).
    pub theorem_rhs: Option<f64>,
    /// `residual_inf / theorem_rhs`, only when the bound is positive.
    pub ratio: Option<f64>,
    pub per_site_residuals: Vec<f64>,
}

impl BoundReport {
    /// True when the bound is defined and the residual does not exceed it.
    pub fn bound_holds(&self) -> Option<bool> {
        self.theorem_rhs.map(|b| self.residual_inf <= b)
    }
}
