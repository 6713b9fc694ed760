use serde::{Deserialize, Serialize};

/// `coefficient · Π_{k ∈ sites} σ_k`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub sites: Vec<usize>,
}

/// Polynomial observable on `±1` configurations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinPolynomial {
    pub terms: Vec<Monomial>,
}

impl SpinPolynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        SpinPolynomial { terms }
    }

    pub fn single_spin(site: usize) -> Self {
        SpinPolynomial::new(vec![Monomial {
            coefficient: 1.0,
            sites: vec![site],
        }])
    }

    pub fn evaluate(&self, sigma: &[i8]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let sign: i8 = t.sites.iter().map(|&k| sigma[k]).product();
                t.coefficient * f64::from(sign)
            })
            .sum()
    }

    /// Largest site index referenced, if any.
    pub fn max_site(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.sites.iter().copied()).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_products_of_spins() {
        let p = SpinPolynomial::new(vec![
            Monomial {
                coefficient: 2.0,
                sites: vec![0, 2],
            },
            Monomial {
                coefficient: -0.5,
                sites: vec![],
            },
        ]);
        assert_eq!(p.evaluate(&[1, -1, -1]), -2.5);
        assert_eq!(p.evaluate(&[-1, 1, -1]), 1.5);
        assert_eq!(p.max_site(), Some(2));
    }
}
