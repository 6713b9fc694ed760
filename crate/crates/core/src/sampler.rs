//! Heat-bath Glauber dynamics for systems beyond the enumeration cap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::cavity_system;
use crate::system::SpinSystem;

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 32;

/// Sweeps between full recomputations of the local fields, which bounds the
/// rounding drift of the incremental updates.
const REFRESH_INTERVAL: usize = 64;

/// What is averaged over the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// The spins themselves.
    SpinAverage,
    /// `tanh` of the local field at each update, i.e. the conditional mean of
    /// the new spin. Same expectation, smaller variance.
    #[default]
    ConditionalMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    #[serde(default)]
    pub estimator: Estimator,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            sweeps: 10_000,
            burn_in: 1_000,
            seed: 0,
            estimator: Estimator::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub m_hat: Vec<f64>,
    /// Batch-means standard errors; zero when fewer than two batches exist.
    pub std_err: Vec<f64>,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
}

/// Probability that a heat-bath update of site `i` sets `σ_i = +1`, given the
/// other spins of `sigma`.
pub fn flip_probability(system: &SpinSystem, sigma: &[i8], i: usize) -> Result<f64> {
    system.check_spins(sigma)?;
    system.check_site(i)?;
    let local: f64 = system
        .row(i)
        .iter()
        .zip(sigma)
        .map(|(j, &s)| j * f64::from(s))
        .sum::<f64>()
        + system.fields()[i];
    Ok(0.5 * (1.0 + local.tanh()))
}

struct Chain<'a> {
    system: &'a SpinSystem,
    neighbours: Vec<Vec<(usize, f64)>>,
    sigma: Vec<i8>,
    local: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> Chain<'a> {
    fn new(system: &'a SpinSystem, seed: u64) -> Self {
        let n = system.n();
        let neighbours = (0..n)
            .map(|i| {
                system
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c != 0.0)
                    .map(|(j, &c)| (j, c))
                    .collect()
            })
            .collect();
        let mut chain = Chain {
            system,
            neighbours,
            sigma: vec![1; n],
            local: vec![0.0; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        chain.refresh();
        chain
    }

    fn refresh(&mut self) {
        let fields = self.system.fields();
        for (i, slot) in self.local.iter_mut().enumerate() {
            *slot = fields[i]
                + self.neighbours[i]
                    .iter()
                    .map(|&(j, c)| c * f64::from(self.sigma[j]))
                    .sum::<f64>();
        }
    }

    /// One scan over all sites; `record(i, σ_i, tanh(local_i))` sees each update.
    fn sweep(&mut self, mut record: impl FnMut(usize, i8, f64)) {
        for i in 0..self.sigma.len() {
            let conditional = self.local[i].tanh();
            let up = self.rng.random::<f64>() < 0.5 * (1.0 + conditional);
            let new = if up { 1 } else { -1 };
            if new != self.sigma[i] {
                let delta = 2.0 * f64::from(new);
                for &(j, c) in &self.neighbours[i] {
                    self.local[j] += c * delta;
                }
                self.sigma[i] = new;
            }
            record(i, new, conditional);
        }
    }
}

/// Glauber estimate of the magnetizations with default estimator.
pub fn glauber_estimate(system: &SpinSystem, sweeps: usize, burn_in: usize, seed: u64) -> Result<SampleEstimate> {
    glauber_estimate_with(
        system,
        &SamplerOptions {
            sweeps,
            burn_in,
            seed,
            ..SamplerOptions::default()
        },
    )
}

/// Runs one chain from the all-plus state, scanning sites in index order.
pub fn glauber_estimate_with(system: &SpinSystem, options: &SamplerOptions) -> Result<SampleEstimate> {
    if options.sweeps == 0 {
        return Err(Error::domain("the sampler needs at least one sweep"));
    }
    let n = system.n();
    let mut chain = Chain::new(system, options.seed);
    for s in 0..options.burn_in {
        chain.sweep(|_, _, _| {});
        if (s + 1) % REFRESH_INTERVAL == 0 {
            chain.refresh();
        }
    }

    let batches = BATCHES.min(options.sweeps);
    let mut batch_sums = vec![0.0; batches * n];
    let mut batch_sizes = vec![0usize; batches];
    for s in 0..options.sweeps {
        let b = s * batches / options.sweeps;
        batch_sizes[b] += 1;
        let row = &mut batch_sums[b * n..(b + 1) * n];
        match options.estimator {
            Estimator::SpinAverage => chain.sweep(|i, spin, _| row[i] += f64::from(spin)),
            Estimator::ConditionalMean => chain.sweep(|i, _, conditional| row[i] += conditional),
        }
        if (s + 1) % REFRESH_INTERVAL == 0 {
            chain.refresh();
        }
    }

    let mut m_hat = vec![0.0; n];
    let mut std_err = vec![0.0; n];
    for i in 0..n {
        let means: Vec<f64> = (0..batches)
            .map(|b| batch_sums[b * n + i] / batch_sizes[b] as f64)
            .collect();
        let total: f64 = (0..batches).map(|b| batch_sums[b * n + i]).sum();
        m_hat[i] = (total / options.sweeps as f64).clamp(-1.0, 1.0);
        if batches > 1 {
            let centre = means.iter().sum::<f64>() / batches as f64;
            let var = means.iter().map(|x| (x - centre).powi(2)).sum::<f64>() / (batches - 1) as f64;
            std_err[i] = (var / batches as f64).sqrt();
        }
    }
    Ok(SampleEstimate {
        m_hat,
        std_err,
        sweeps: options.sweeps,
        burn_in: options.burn_in,
        seed: options.seed,
    })
}

/// Glauber estimate on the system with site `i` removed. Entries are indexed
/// by the remaining sites in their original order.
pub fn cavity_average_estimate(
    system: &SpinSystem,
    i: usize,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SampleEstimate> {
    glauber_estimate(&cavity_system(system, i)?, sweeps, burn_in, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::gibbs_exact;
    use rand::Rng;

    fn random_ferromagnet(n: usize, seed: u64) -> SpinSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random_range(0.0..0.5 / n as f64 * 4.0);
                c[i * n + j] = v;
                c[j * n + i] = v;
            }
        }
        let h = (0..n).map(|_| rng.random_range(0.1..0.8)).collect();
        SpinSystem::new(c, h).unwrap()
    }

    #[test]
    fn product_measure_is_recovered() {
        let sys = SpinSystem::decoupled(vec![0.7; 100]).unwrap();
        let est = glauber_estimate_with(
            &sys,
            &SamplerOptions {
                sweeps: 10_000,
                burn_in: 100,
                seed: 5,
                estimator: Estimator::SpinAverage,
            },
        )
        .unwrap();
        let truth = 0.7f64.tanh();
        let inside = est
            .m_hat
            .iter()
            .zip(&est.std_err)
            .filter(|(m, se)| (*m - truth).abs() <= 4.0 * *se)
            .count();
        assert!(inside >= 95, "{inside} sites inside");
        // the conditional mean of a decoupled spin is exact
        let exact = glauber_estimate(&sys, 10, 0, 5).unwrap();
        assert!(exact.m_hat.iter().all(|m| (m - truth).abs() < 1e-15));
    }

    #[test]
    fn small_ferromagnet_matches_enumeration() {
        let sys = random_ferromagnet(10, 11);
        let truth = gibbs_exact(&sys, false).unwrap().m;
        let est = glauber_estimate(&sys, 20_000, 500, 3).unwrap();
        for ((m, se), t) in est.m_hat.iter().zip(&est.std_err).zip(&truth) {
            assert!((m - t).abs() <= 4.0 * se.max(1e-6), "{m} vs {t} (se {se})");
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let sys = random_ferromagnet(12, 1);
        let a = glauber_estimate(&sys, 500, 50, 42).unwrap();
        let b = glauber_estimate(&sys, 500, 50, 42).unwrap();
        assert_eq!(a, b);
        let c = glauber_estimate(&sys, 500, 50, 43).unwrap();
        assert_ne!(a.m_hat, c.m_hat);
    }

    #[test]
    fn estimates_stay_in_range() {
        let sys = random_ferromagnet(8, 2);
        for estimator in [Estimator::SpinAverage, Estimator::ConditionalMean] {
            let est = glauber_estimate_with(
                &sys,
                &SamplerOptions {
                    sweeps: 7,
                    burn_in: 0,
                    seed: 0,
                    estimator,
                },
            )
            .unwrap();
            assert!(est.m_hat.iter().all(|m| (-1.0..=1.0).contains(m)));
            assert!(est.std_err.iter().all(|s| *s >= 0.0));
        }
        assert!(glauber_estimate(&sys, 0, 10, 0).is_err());
    }

    #[test]
    fn heat_bath_satisfies_detailed_balance() {
        for n in 1..=4 {
            let sys = random_ferromagnet(n, 100 + n as u64);
            let configs: Vec<Vec<i8>> = (0..1u32 << n)
                .map(|bits| (0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect())
                .collect();
            let log_z = gibbs_exact(&sys, false).unwrap().log_z;
            let pi = |s: &[i8]| (-sys.hamiltonian(s).unwrap() - log_z).exp();
            for sigma in &configs {
                for i in 0..n {
                    let mut flipped = sigma.clone();
                    flipped[i] = -flipped[i];
                    let up = flip_probability(&sys, sigma, i).unwrap();
                    let to = |s: i8| if s > 0 { up } else { 1.0 - up };
                    let forward = pi(sigma) * to(flipped[i]);
                    let backward = pi(&flipped) * to(sigma[i]);
                    assert!((forward - backward).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cavity_estimate_matches_exact_cavity() {
        let sys = random_ferromagnet(9, 8);
        let cavity = cavity_system(&sys, 3).unwrap();
        let truth = gibbs_exact(&cavity, false).unwrap().m;
        let est = cavity_average_estimate(&sys, 3, 20_000, 500, 9).unwrap();
        assert_eq!(est.m_hat.len(), 8);
        for ((m, se), t) in est.m_hat.iter().zip(&est.std_err).zip(&truth) {
            assert!((m - t).abs() <= 4.0 * se.max(1e-6));
        }
        assert!(cavity_average_estimate(&SpinSystem::decoupled(vec![0.1]).unwrap(), 0, 10, 0, 0).is_err());
    }

    #[test]
    fn removing_a_decoupled_spin_leaves_estimates_unchanged() {
        let base = random_ferromagnet(6, 4);
        let n = 7;
        let mut c = vec![0.0; n * n];
        for i in 0..6 {
            for j in 0..6 {
                c[i * n + j] = base.coupling(i, j);
            }
        }
        let mut h = base.fields().to_vec();
        h.push(0.5);
        let extended = SpinSystem::new(c, h).unwrap();
        let full = glauber_estimate(&extended, 20_000, 200, 1).unwrap();
        let cavity = cavity_average_estimate(&extended, 6, 20_000, 200, 2).unwrap();
        for i in 0..6 {
            let tolerance = 4.0 * (full.std_err[i].powi(2) + cavity.std_err[i].powi(2)).sqrt();
            assert!((full.m_hat[i] - cavity.m_hat[i]).abs() <= tolerance.max(1e-9));
        }
    }
}
