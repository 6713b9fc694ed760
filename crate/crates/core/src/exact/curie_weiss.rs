use crate::error::{Error, Result};

/// Largest Curie-Weiss system the sector sum accepts.
pub const CURIE_WEISS_MAX_N: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurieWeissExact {
    /// `⟨M⟩`, the mean magnetization per site.
    pub m: f64,
    pub log_z: f64,
}

/// Exact Curie-Weiss magnetization by summing over magnetization sectors.
///
/// Matches the generated system `J_ij = β/n` off the diagonal, `J_ii = 0`, so
/// the sector energy carries the `-β/2` diagonal correction:
///
/// ```text
/// ln Z = ln Σ_k C(n,k) exp(β/(2n)·(S_k² - n) + h·S_k),   S_k = n - 2k
/// ```
pub fn curie_weiss_exact(n: usize, beta: f64, h: f64) -> Result<CurieWeissExact> {
    if n == 0 || n > CURIE_WEISS_MAX_N {
        return Err(Error::domain(format!(
            "Curie-Weiss sector sum needs 1 ≤ n ≤ {CURIE_WEISS_MAX_N}, got {n}"
        )));
    }
    if !(beta >= 0.0) || !beta.is_finite() || !h.is_finite() {
        return Err(Error::domain(format!(
            "Curie-Weiss needs finite beta ≥ 0 and finite h, got beta = {beta}, h = {h}"
        )));
    }

    // ln C(n, k), built from the ends inward so that C(n,k) and C(n,n-k) are
    // bitwise equal
    let mut log_binom = vec![0.0; n + 1];
    for k in 0..n / 2 {
        log_binom[k + 1] = log_binom[k] + ((n - k) as f64 / (k + 1) as f64).ln();
    }
    for k in 0..=n / 2 {
        log_binom[n - k] = log_binom[k];
    }

    let nf = n as f64;
    let coupling = beta / (2.0 * nf);
    let log_weights: Vec<f64> = (0..=n)
        .map(|k| {
            let s = (n as f64) - 2.0 * k as f64;
            log_binom[k] + coupling * (s * s - nf) + h * s
        })
        .collect();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut total = 0.0;
    let mut moment = 0.0;
    // pair sectors k and n-k; with h = 0 their contributions cancel exactly
    for k in 0..=n / 2 {
        let mirror = n - k;
        let s = (n as f64) - 2.0 * k as f64;
        let w = (log_weights[k] - max).exp();
        if mirror == k {
            total += w;
            continue;
        }
        let w_mirror = (log_weights[mirror] - max).exp();
        total += w + w_mirror;
        moment += (w - w_mirror) * s;
    }

    Ok(CurieWeissExact {
        m: moment / (total * nf),
        log_z: max + total.ln(),
    })
}
