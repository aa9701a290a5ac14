//! Base-2 information measures shared by the solvers.
//!
//! All logarithms are binary and all quantities are in bits.

use crate::error::{Error, Result};
use crate::markov::Policy;

/// Tolerance for "sums to one" checks on probability vectors.
pub const DIST_SUM_TOL: f64 = 1e-12;

/// A probability distribution over a finite, indexed support.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates nonnegativity and normalization (within `DIST_SUM_TOL`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution {
                reason: "probabilities must be finite and nonnegative".to_string(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidDistribution {
                reason: format!("probabilities sum to {sum}, expected 1"),
            });
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on outcome `i`.
    pub fn point_mass(i: usize, n: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Shannon entropy of `p` in bits, with the 0 log 0 = 0 convention.
pub fn entropy(p: &Distribution) -> f64 {
    entropy_slice(p.as_slice())
}

pub(crate) fn entropy_slice(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Kullback-Leibler divergence D(p || q) in bits.
///
/// Conventions: 0 log(0/r) = 0 and s log(s/0) = +inf for s > 0, so the result
/// is `f64::INFINITY` whenever p puts mass where q has none.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "KL divergence supports",
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(kl_slices(p.as_slice(), q.as_slice()))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            sum += pi * (pi / qi).log2();
        }
    }
    sum
}

/// Marginal action distribution of a policy under a state distribution:
/// p(a) = sum_s pi(a|s) p(s).
pub fn action_marginal(policy: &Policy, state_dist: &Distribution) -> Result<Distribution> {
    if policy.n_states() != state_dist.len() {
        return Err(Error::DimensionMismatch {
            context: "action marginal state count",
            expected: policy.n_states(),
            actual: state_dist.len(),
        });
    }
    let mut marginal = vec![0.0; policy.n_actions()];
    for s in 0..policy.n_states() {
        let w = state_dist.get(s);
        if w == 0.0 {
            continue;
        }
        for (a, &p) in policy.row(s).iter().enumerate() {
            marginal[a] += w * p;
        }
    }
    Distribution::new(marginal)
}
