//! Brute-force Gibbs oracles.
//!
//! Everything here sums over all `2^n` configurations. The walk follows a
//! binary-reflected Gray code, so consecutive configurations differ in one
//! spin and the energy is updated in `O(n)` from cached local fields. Weights
//! are accumulated in the log domain, which keeps large couplings and fields
//! from overflowing.

mod curie_weiss;
mod lee_yang;
mod observable;

pub use curie_weiss::{curie_weiss_exact, CurieWeissExact};
pub use lee_yang::{lee_yang_zeros, LeeYangZeros, LEE_YANG_CAP};
pub use observable::{Monomial, SpinPolynomial};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::LogWeightedSums;
use crate::system::SpinSystem;

/// Default largest system the enumeration oracles accept.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Configurations per enumeration block; blocks are walked independently.
const BLOCK_BITS: usize = 14;

/// Exact Gibbs quantities of a finite system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    /// `ln Z`
    pub log_z: f64,
    /// `m_i = ⟨σ_i⟩`
    pub m: Vec<f64>,
    /// `⟨σ_i σ_j⟩`, when requested.
    #[serde(rename = "pairs", skip_serializing_if = "Option::is_none", default)]
    pub pair_correlations: Option<Vec<Vec<f64>>>,
}

/// Enumeration oracle with a configurable size cap.
#[derive(Debug, Clone, Copy)]
pub struct ExactOracle {
    pub cap: usize,
}

impl Default for ExactOracle {
    fn default() -> Self {
        ExactOracle {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Raw moments used by the cumulant formulas.
struct CouplingMoments {
    f: f64,
    f_si: f64,
    f_sj: f64,
    f_si_sj: f64,
    m_i: f64,
    m_j: f64,
    si_sj: f64,
}

impl ExactOracle {
    pub fn with_cap(cap: usize) -> Self {
        ExactOracle { cap }
    }

    fn check_size(&self, system: &SpinSystem) -> Result<()> {
        let cap = self.cap.min(62);
        if system.n() > cap {
            Err(Error::TooLarge { n: system.n(), cap })
        } else {
            Ok(())
        }
    }

    /// Weighted sums over all configurations. `contribute(σ, w, sums)` adds the
    /// weighted observables of one configuration.
    fn accumulate<F>(&self, system: &SpinSystem, dim: usize, contribute: F) -> Result<LogWeightedSums>
    where
        F: Fn(&[i8], f64, &mut [f64]) + Sync,
    {
        self.check_size(system)?;
        let n = system.n();
        let block_bits = BLOCK_BITS.min(n);
        let block_len = 1u64 << block_bits;
        let blocks = 1u64 << (n - block_bits);

        let partials: Vec<LogWeightedSums> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut acc = LogWeightedSums::new(dim);
                walk_gray_block(system, b * block_len, (b + 1) * block_len, |sigma, log_w| {
                    acc.push(log_w, |w, sums| contribute(sigma, w, sums));
                });
                acc
            })
            .collect();

        // merge in block order so results do not depend on scheduling
        let mut total = LogWeightedSums::new(dim);
        for part in partials {
            total.merge(part);
        }
        Ok(total)
    }

    pub fn gibbs_exact(&self, system: &SpinSystem, want_pairs: bool) -> Result<GibbsReport> {
        let n = system.n();
        let dim = if want_pairs { n + n * n } else { n };
        let acc = self.accumulate(system, dim, |sigma, w, sums| {
            let (singles, pairs) = sums.split_at_mut(n);
            for (slot, &s) in singles.iter_mut().zip(sigma) {
                *slot += w * f64::from(s);
            }
            if want_pairs {
                for i in 0..n {
                    let wi = w * f64::from(sigma[i]);
                    let row = &mut pairs[i * n..(i + 1) * n];
                    for j in (i + 1)..n {
                        row[j] += wi * f64::from(sigma[j]);
                    }
                }
            }
        })?;
        let means = acc.means();
        let m = means[..n].to_vec();
        let pair_correlations = want_pairs.then(|| {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                rows[i][i] = 1.0;
                for j in (i + 1)..n {
                    let c = means[n + i * n + j];
                    rows[i][j] = c;
                    rows[j][i] = c;
                }
            }
            rows
        });
        Ok(GibbsReport {
            log_z: acc.log_total(),
            m,
            pair_correlations,
        })
    }

    pub fn gibbs_expectation<F>(&self, system: &SpinSystem, f: F) -> Result<f64>
    where
        F: Fn(&[i8]) -> f64 + Sync,
    {
        let acc = self.accumulate(system, 1, |sigma, w, sums| sums[0] += w * f(sigma))?;
        Ok(acc.means()[0])
    }

    /// `∂⟨f⟩/∂h_j = ⟨f σ_j⟩ - ⟨f⟩⟨σ_j⟩`.
    pub fn field_derivative<F>(&self, system: &SpinSystem, f: F, j: usize) -> Result<f64>
    where
        F: Fn(&[i8]) -> f64 + Sync,
    {
        system.check_site(j)?;
        let acc = self.accumulate(system, 3, |sigma, w, sums| {
            let fv = f(sigma);
            let sj = f64::from(sigma[j]);
            sums[0] += w * fv;
            sums[1] += w * fv * sj;
            sums[2] += w * sj;
        })?;
        let mean = acc.means();
        Ok(mean[1] - mean[0] * mean[2])
    }

    fn coupling_moments<F>(&self, system: &SpinSystem, f: &F, i: usize, j: usize) -> Result<CouplingMoments>
    where
        F: Fn(&[i8]) -> f64 + Sync,
    {
        let acc = self.accumulate(system, 7, |sigma, w, sums| {
            let fv = f(sigma);
            let si = f64::from(sigma[i]);
            let sj = f64::from(sigma[j]);
            sums[0] += w * fv;
            sums[1] += w * fv * si;
            sums[2] += w * fv * sj;
            sums[3] += w * fv * si * sj;
            sums[4] += w * si;
            sums[5] += w * sj;
            sums[6] += w * si * sj;
        })?;
        let e = acc.means();
        Ok(CouplingMoments {
            f: e[0],
            f_si: e[1],
            f_sj: e[2],
            f_si_sj: e[3],
            m_i: e[4],
            m_j: e[5],
            si_sj: e[6],
        })
    }

    /// Both sides of the coupling/field derivative identity
    ///
    /// ```text
    /// ∂⟨f⟩/∂J_ij = m_i ∂⟨f⟩/∂h_j + m_j ∂⟨f⟩/∂h_i + ∂²⟨f⟩/∂h_i∂h_j
    /// ```
    ///
    /// where `J_ij = J_ji` vary jointly. The left side is `Cov(f, σ_i σ_j)`;
    /// the right side is assembled from the field covariances and the third
    /// joint cumulant.
    pub fn coupling_identity_check<F>(&self, system: &SpinSystem, f: F, i: usize, j: usize) -> Result<(f64, f64)>
    where
        F: Fn(&[i8]) -> f64 + Sync,
    {
        system.check_site(i)?;
        system.check_site(j)?;
        if i == j {
            return Err(Error::domain("the coupling identity needs two distinct sites"));
        }
        let mo = self.coupling_moments(system, &f, i, j)?;
        let lhs = mo.f_si_sj - mo.f * mo.si_sj;
        let d_hj = mo.f_sj - mo.f * mo.m_j;
        let d_hi = mo.f_si - mo.f * mo.m_i;
        let d_hi_hj = mo.f_si_sj - mo.f * mo.si_sj - mo.f_si * mo.m_j - mo.f_sj * mo.m_i + 2.0 * mo.f * mo.m_i * mo.m_j;
        let rhs = mo.m_i * d_hj + mo.m_j * d_hi + d_hi_hj;
        Ok((lhs, rhs))
    }

    /// Magnetizations, covariances, and third cumulants through `pivot`.
    pub fn site_cumulants(&self, system: &SpinSystem, pivot: usize) -> Result<SiteCumulants> {
        system.check_site(pivot)?;
        let n = system.n();
        let pairs_at = n;
        let triples_at = n + n * n;
        let acc = self.accumulate(system, n + 2 * n * n, |sigma, w, sums| {
            let (singles, rest) = sums.split_at_mut(pairs_at);
            let (pairs, triples) = rest.split_at_mut(triples_at - pairs_at);
            let wp = w * f64::from(sigma[pivot]);
            for i in 0..n {
                let si = f64::from(sigma[i]);
                singles[i] += w * si;
                let wi = w * si;
                let wpi = wp * si;
                let pair_row = &mut pairs[i * n..(i + 1) * n];
                let triple_row = &mut triples[i * n..(i + 1) * n];
                for j in i..n {
                    let sj = f64::from(sigma[j]);
                    pair_row[j] += wi * sj;
                    triple_row[j] += wpi * sj;
                }
            }
        })?;
        let e = acc.means();
        let m = e[..n].to_vec();
        let second = |i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            e[pairs_at + a * n + b]
        };
        let third_raw = |i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            e[triples_at + a * n + b]
        };
        let mut cov = vec![0.0; n * n];
        let mut third = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = second(i, j) - m[i] * m[j];
                third[i * n + j] =
                    third_raw(i, j) - second(pivot, i) * m[j] - second(pivot, j) * m[i] - second(i, j) * m[pivot]
                        + 2.0 * m[pivot] * m[i] * m[j];
            }
        }
        Ok(SiteCumulants {
            pivot,
            m,
            cov,
            third,
            log_z: acc.log_total(),
        })
    }
}

/// Field derivatives of the magnetizations of one system.
///
/// `cov[i][j] = ∂m_i/∂h_j` and `third[i][j] = ∂²m_i/∂h_pivot∂h_j`.
#[derive(Debug, Clone)]
pub struct SiteCumulants {
    pub pivot: usize,
    pub m: Vec<f64>,
    pub cov: Vec<f64>,
    pub third: Vec<f64>,
    pub log_z: f64,
}

impl SiteCumulants {
    pub fn n(&self) -> usize {
        self.m.len()
    }

    /// `∂m_k/∂s = Σ_j s_j ∂m_k/∂h_j`.
    pub fn directional(&self, k: usize, s: &[f64]) -> f64 {
        let n = self.n();
        self.cov[k * n..(k + 1) * n].iter().zip(s).map(|(c, x)| c * x).sum()
    }

    /// `∂²m_k/∂h_pivot ∂s`.
    pub fn mixed(&self, k: usize, s: &[f64]) -> f64 {
        let n = self.n();
        self.third[k * n..(k + 1) * n].iter().zip(s).map(|(c, x)| c * x).sum()
    }
}

/// Walks Gray-code indices `start..end`, calling `visit(σ, -H(σ))`.
///
/// Bit `k` of the Gray code set means `σ_k = -1`.
fn walk_gray_block(system: &SpinSystem, start: u64, end: u64, mut visit: impl FnMut(&[i8], f64)) {
    let n = system.n();
    let fields = system.fields();
    let gray = start ^ (start >> 1);
    let mut sigma: Vec<i8> = (0..n).map(|k| if gray >> k & 1 == 1 { -1 } else { 1 }).collect();
    let mut local: Vec<f64> = (0..n)
        .map(|i| system.row(i).iter().zip(&sigma).map(|(j, &s)| j * f64::from(s)).sum())
        .collect();
    let mut log_w: f64 = (0..n).map(|i| f64::from(sigma[i]) * (0.5 * local[i] + fields[i])).sum();

    for idx in start..end {
        visit(&sigma, log_w);
        let next = idx + 1;
        if next == end {
            break;
        }
        let k = next.trailing_zeros() as usize;
        let old = f64::from(sigma[k]);
        log_w -= 2.0 * old * (local[k] + fields[k]);
        for (l, j) in local.iter_mut().zip(system.row(k)) {
            *l -= 2.0 * j * old;
        }
        sigma[k] = -sigma[k];
    }
}

/// The `(n-1)`-spin system with site `i` deleted.
pub fn cavity_system(system: &SpinSystem, i: usize) -> Result<SpinSystem> {
    system.check_site(i)?;
    let n = system.n();
    if n < 2 {
        return Err(Error::domain("cannot remove the only spin of a one-site system"));
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let mut couplings = Vec::with_capacity((n - 1) * (n - 1));
    for &a in &keep {
        for &b in &keep {
            couplings.push(system.coupling(a, b));
        }
    }
    let fields = keep.iter().map(|&a| system.fields()[a]).collect();
    SpinSystem::new(couplings, fields)
}

pub fn gibbs_exact(system: &SpinSystem, want_pairs: bool) -> Result<GibbsReport> {
    ExactOracle::default().gibbs_exact(system, want_pairs)
}

pub fn gibbs_expectation<F>(system: &SpinSystem, f: F) -> Result<f64>
where
    F: Fn(&[i8]) -> f64 + Sync,
{
    ExactOracle::default().gibbs_expectation(system, f)
}

pub fn field_derivative<F>(system: &SpinSystem, f: F, j: usize) -> Result<f64>
where
    F: Fn(&[i8]) -> f64 + Sync,
{
    ExactOracle::default().field_derivative(system, f, j)
}

pub fn coupling_identity_check<F>(system: &SpinSystem, f: F, i: usize, j: usize) -> Result<(f64, f64)>
where
    F: Fn(&[i8]) -> f64 + Sync,
{
    ExactOracle::default().coupling_identity_check(system, f, i, j)
}

pub fn site_cumulants(system: &SpinSystem, pivot: usize) -> Result<SiteCumulants> {
    ExactOracle::default().site_cumulants(system, pivot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_spin(j: f64, h: [f64; 2]) -> SpinSystem {
        SpinSystem::new(vec![0.0, j, j, 0.0], h.to_vec()).unwrap()
    }

    fn spin(i: usize) -> impl Fn(&[i8]) -> f64 + Sync {
        move |s: &[i8]| f64::from(s[i])
    }

    /// Direct sum over configurations in natural order, no Gray code.
    fn naive_log_z(system: &SpinSystem) -> f64 {
        let n = system.n();
        let energies: Vec<f64> = (0..1u32 << n)
            .map(|bits| {
                let sigma: Vec<i8> = (0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect();
                -system.hamiltonian(&sigma).unwrap()
            })
            .collect();
        crate::numerics::log_sum_exp(&energies)
    }

    #[test]
    fn single_spin_magnetization() {
        let sys = SpinSystem::decoupled(vec![0.7]).unwrap();
        let report = gibbs_exact(&sys, false).unwrap();
        assert_relative_eq!(report.m[0], 0.7f64.tanh(), max_relative = 1e-14);
        assert_relative_eq!(report.log_z, (2.0 * 0.7f64.cosh()).ln(), max_relative = 1e-14);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn two_spin_closed_form() {
        let sys = two_spin(0.5, [0.3, 0.3]);
        let report = gibbs_exact(&sys, true).unwrap();
        // 2e^J sinh(2h) / (2e^J cosh(2h) + 2e^-J) at J = 0.5, h = 0.3
        let expected = 0.409_859_832_645_600_997_5;
        assert_relative_eq!(report.m[0], expected, max_relative = 1e-13);
        assert_relative_eq!(report.m[1], expected, max_relative = 1e-13);
        let z = (0.5f64 + 0.6).exp() + (0.5f64 - 0.6).exp() + 2.0 * (-0.5f64).exp();
        assert_relative_eq!(report.log_z, z.ln(), max_relative = 1e-14);
        let pairs = report.pair_correlations.unwrap();
        assert_eq!(pairs[0][0], 1.0);
        assert_eq!(pairs[0][1], pairs[1][0]);
    }

    #[test]
    fn decoupled_systems_are_product_measures() {
        let fields = vec![0.3, -1.2, 0.0, 2.5, 0.01, -0.4, 0.9, 1.1, -2.0, 0.5];
        let sys = SpinSystem::decoupled(fields.clone()).unwrap();
        let report = gibbs_exact(&sys, false).unwrap();
        for (m, h) in report.m.iter().zip(&fields) {
            assert!((m - h.tanh()).abs() < 1e-13);
        }
    }

    #[test]
    fn gray_walk_matches_naive_enumeration() {
        let sys = SpinSystem::new(
            vec![
                0.0, 0.4, 1.3, 0.0, //
                0.4, 0.0, 0.2, 0.7, //
                1.3, 0.2, 0.0, 0.1, //
                0.0, 0.7, 0.1, 0.0,
            ],
            vec![0.1, -0.3, 0.8, 0.0],
        )
        .unwrap();
        let report = gibbs_exact(&sys, false).unwrap();
        assert_relative_eq!(report.log_z, naive_log_z(&sys), max_relative = 1e-13);
    }

    #[test]
    fn blocked_walk_matches_naive_enumeration() {
        // 16 spins spans four enumeration blocks
        let n = 16;
        let mut couplings = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = ((i * 7 + j * 3) % 5) as f64 * 0.05;
                couplings[i * n + j] = v;
                couplings[j * n + i] = v;
            }
        }
        let fields = (0..n).map(|i| 0.1 * (i % 3) as f64 - 0.05).collect();
        let sys = SpinSystem::new(couplings, fields).unwrap();
        let report = gibbs_exact(&sys, false).unwrap();
        assert_relative_eq!(report.log_z, naive_log_z(&sys), max_relative = 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let sys = two_spin(0.5, [0.0, 0.0]);
        assert_relative_eq!(gibbs_expectation(&sys, |_| 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            gibbs_expectation(&sys, |s| f64::from(s[0] * s[1])).unwrap(),
            0.5f64.tanh(),
            max_relative = 1e-14
        );
        let single = SpinSystem::decoupled(vec![0.7]).unwrap();
        assert_relative_eq!(
            gibbs_expectation(&single, spin(0)).unwrap(),
            0.7f64.tanh(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn size_cap_is_enforced() {
        let sys = SpinSystem::decoupled(vec![0.1; 5]).unwrap();
        let oracle = ExactOracle::with_cap(4);
        assert!(matches!(
            oracle.gibbs_exact(&sys, false),
            Err(Error::TooLarge { n: 5, cap: 4 })
        ));
        assert!(matches!(
            oracle.gibbs_expectation(&sys, |_| 1.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn field_derivative_examples() {
        let sys = two_spin(0.5, [0.3, 0.3]);
        let m = gibbs_exact(&sys, false).unwrap().m;
        let chi = field_derivative(&sys, spin(1), 1).unwrap();
        assert_relative_eq!(chi, 1.0 - m[1] * m[1], max_relative = 1e-13);

        let free = SpinSystem::decoupled(vec![0.3, 0.8, -0.1]).unwrap();
        assert!(field_derivative(&free, spin(0), 2).unwrap().abs() < 1e-15);

        // central difference of m_1 in h_2
        let step = 1e-5;
        let m_at = |h2: f64| gibbs_exact(&two_spin(0.5, [0.3, h2]), false).unwrap().m[0];
        let fd = (m_at(0.3 + step) - m_at(0.3 - step)) / (2.0 * step);
        let exact = field_derivative(&sys, spin(0), 1).unwrap();
        assert!((fd - exact).abs() < 1e-8, "fd {fd} vs exact {exact}");

        assert!(matches!(
            field_derivative(&sys, spin(0), 2),
            Err(Error::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn coupling_identity_examples() {
        let sys = SpinSystem::new(
            vec![
                0.0, 0.3, 0.1, 0.5, //
                0.3, 0.0, 0.2, 0.0, //
                0.1, 0.2, 0.0, 0.4, //
                0.5, 0.0, 0.4, 0.0,
            ],
            vec![0.2, 0.6, 0.1, 0.9],
        )
        .unwrap();
        for k in 0..4 {
            let (lhs, rhs) = coupling_identity_check(&sys, spin(k), 0, 2).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10);
        }
        let (lhs, rhs) = coupling_identity_check(&sys, |_| 3.0, 1, 3).unwrap();
        assert!(lhs.abs() < 1e-14 && rhs.abs() < 1e-14);

        let zero = SpinSystem::decoupled(vec![0.0; 3]).unwrap();
        let (lhs, rhs) = coupling_identity_check(&zero, spin(0), 1, 2).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);

        assert!(matches!(
            coupling_identity_check(&sys, spin(0), 1, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coupling_derivative_matches_finite_difference() {
        let base = vec![
            0.0, 0.3, 0.1, //
            0.3, 0.0, 0.6, //
            0.1, 0.6, 0.0,
        ];
        let fields = vec![0.4, 0.1, 0.7];
        let f = |s: &[i8]| f64::from(s[0]) + 0.5 * f64::from(s[1] * s[2]);
        let at = |delta: f64| {
            let mut c = base.clone();
            c[1] += delta;
            c[3] += delta;
            gibbs_expectation(&SpinSystem::new(c, fields.clone()).unwrap(), f).unwrap()
        };
        let step = 1e-5;
        let fd = (at(step) - at(-step)) / (2.0 * step);
        let sys = SpinSystem::new(base.clone(), fields.clone()).unwrap();
        let (lhs, rhs) = coupling_identity_check(&sys, f, 0, 1).unwrap();
        assert!((fd - lhs).abs() < 1e-8, "fd {fd} vs lhs {lhs}");
        assert!((fd - rhs).abs() < 1e-8);
    }

    #[test]
    fn cavity_examples() {
        let sys = two_spin(0.5, [0.3, 0.9]);
        let cav = cavity_system(&sys, 0).unwrap();
        assert_eq!(cav.n(), 1);
        let m = gibbs_exact(&cav, false).unwrap().m;
        assert_relative_eq!(m[0], 0.9f64.tanh(), max_relative = 1e-14);

        let single = SpinSystem::decoupled(vec![0.2]).unwrap();
        assert!(matches!(cavity_system(&single, 0), Err(Error::Domain(_))));
        assert!(matches!(cavity_system(&sys, 2), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn removing_a_decoupled_spin_changes_nothing() {
        let sys = SpinSystem::new(
            vec![
                0.0, 0.0, 0.0, //
                0.0, 0.0, 0.8, //
                0.0, 0.8, 0.0,
            ],
            vec![0.5, 0.2, 0.3],
        )
        .unwrap();
        let full = gibbs_exact(&sys, false).unwrap().m;
        let cav = gibbs_exact(&cavity_system(&sys, 0).unwrap(), false).unwrap().m;
        assert!((full[1] - cav[0]).abs() < 1e-14);
        assert!((full[2] - cav[1]).abs() < 1e-14);
    }

    #[test]
    fn site_cumulants_match_pairwise_routines() {
        let sys = SpinSystem::new(
            vec![
                0.0, 0.3, 0.1, //
                0.3, 0.0, 0.6, //
                0.1, 0.6, 0.0,
            ],
            vec![0.4, 0.1, 0.7],
        )
        .unwrap();
        let cum = site_cumulants(&sys, 0).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let d = field_derivative(&sys, spin(k), j).unwrap();
                assert!((cum.cov[k * 3 + j] - d).abs() < 1e-14);
            }
        }
        // ∂²m_k/∂h_0∂h_j by central differences of the covariance
        let step = 1e-5;
        let cov_at = |h0: f64, k: usize, j: usize| {
            let shifted = sys.with_fields(vec![h0, 0.1, 0.7]).unwrap();
            field_derivative(&shifted, spin(k), j).unwrap()
        };
        for k in 0..3 {
            for j in 0..3 {
                let fd = (cov_at(0.4 + step, k, j) - cov_at(0.4 - step, k, j)) / (2.0 * step);
                assert!((cum.third[k * 3 + j] - fd).abs() < 1e-8);
            }
        }
    }
}
