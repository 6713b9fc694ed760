use anyhow::Context;
use ferromf::io::read_system;
use ferromf::models::{curie_weiss, diluted, kac, rank_one, DilutedSpec};
use ferromf::SpinSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;

/// A generated system plus model-specific extras.
#[derive(Debug, Clone)]
pub struct Built {
    pub system: SpinSystem,
    /// Site furthest from the boundary, for Kać boxes.
    pub center_site: Option<usize>,
    /// Kernel normalization error, for Kać boxes.
    pub normalization_residual: Option<f64>,
}

impl Built {
    fn plain(system: SpinSystem) -> Self {
        Built {
            system,
            center_site: None,
            normalization_residual: None,
        }
    }
}

/// Builds the system; models without their own seed use `seed`.
pub fn build(model: &ModelConfig, seed: u64) -> anyhow::Result<Built> {
    Ok(match model {
        ModelConfig::CurieWeiss { n, beta, h } => Built::plain(curie_weiss(*n, *beta, *h)?),
        ModelConfig::Kac(spec) => {
            let k = kac(spec)?;
            Built {
                system: k.system,
                center_site: Some(k.center_site),
                normalization_residual: Some(k.normalization_residual),
            }
        }
        ModelConfig::Diluted {
            n,
            beta,
            p,
            h,
            seed: own,
        } => Built::plain(diluted(&DilutedSpec {
            n: *n,
            beta: *beta,
            p: *p,
            h: *h,
            seed: own.unwrap_or(seed),
        })?),
        ModelConfig::RankOne { w, h } => Built::plain(rank_one(w, *h)?),
        ModelConfig::File { path, h } => {
            let system = read_system(path).with_context(|| format!("reading {}", path.display()))?;
            Built::plain(match h {
                Some(h) => system.with_uniform_field(*h)?,
                None => system,
            })
        }
        ModelConfig::Random {
            n,
            j_max,
            h_min,
            h_max,
            seed: own,
        } => Built::plain(random_ferromagnet(*n, *j_max, *h_min, *h_max, own.unwrap_or(seed))?),
    })
}

/// Upper-triangle couplings uniform on `[0, j_max]` in row-major order, then
/// fields uniform on `[h_min, h_max]`, all from one ChaCha8 stream.
pub fn random_ferromagnet(n: usize, j_max: f64, h_min: f64, h_max: f64, seed: u64) -> anyhow::Result<SpinSystem> {
    if n == 0 {
        anyhow::bail!("random model needs n ≥ 1");
    }
    if !(j_max >= 0.0) || !(h_min <= h_max) {
        anyhow::bail!("random model needs j_max ≥ 0 and h_min ≤ h_max");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = j_max * rng.random::<f64>();
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    let h = (0..n).map(|_| h_min + (h_max - h_min) * rng.random::<f64>()).collect();
    Ok(SpinSystem::new(c, h)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_model_is_reproducible_and_in_range() {
        let a = random_ferromagnet(7, 0.5, 0.2, 0.9, 11).unwrap();
        assert_eq!(a, random_ferromagnet(7, 0.5, 0.2, 0.9, 11).unwrap());
        assert_ne!(a, random_ferromagnet(7, 0.5, 0.2, 0.9, 12).unwrap());
        assert!(a.couplings().iter().all(|&c| (0.0..=0.5).contains(&c)));
        assert!(a.fields().iter().all(|&h| (0.2..=0.9).contains(&h)));
    }

    #[test]
    fn model_seed_overrides_the_experiment_seed() {
        let model = ModelConfig::Diluted {
            n: 30,
            beta: 1.0,
            p: 0.3,
            h: 0.2,
            seed: Some(5),
        };
        assert_eq!(build(&model, 1).unwrap().system, build(&model, 2).unwrap().system);
        let unseeded = ModelConfig::Diluted {
            n: 30,
            beta: 1.0,
            p: 0.3,
            h: 0.2,
            seed: None,
        };
        assert_eq!(build(&unseeded, 5).unwrap().system, build(&model, 9).unwrap().system);
    }
}
