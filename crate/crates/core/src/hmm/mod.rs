//! Hidden Markov models with discrete and diagonal-Gaussian emissions.
//!
//! Both share one scaled forward-backward engine that takes per-frame
//! log emission likelihoods, so likelihoods far below `f64::MIN_POSITIVE`
//! stay representable.

mod discrete;
mod engine;
mod gaussian;

pub use discrete::{fit_discrete, DiscreteHmm};
pub use engine::{forward_log_likelihood, Posteriors};
pub use gaussian::{fit_gaussian, GaussianHmm, VARIANCE_FLOOR};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stopping rule and restarts for Baum-Welch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the total log-likelihood gain of one iteration drops
    /// below this.
    pub tol: f64,
    pub restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { max_iter: 200, tol: 1e-6, restarts: 10 }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::param("tol", "must be non-negative"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be positive"));
        }
        Ok(())
    }
}

/// Per-iteration training log-likelihoods of one restart.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    pub log_likelihoods: alloc::vec::Vec<f64>,
}

fn check_distribution(name: &'static str, row: &[f64]) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::data(alloc::format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::data(alloc::format!("{name} sums to {s}")));
    }
    Ok(())
}

fn random_distribution<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> alloc::vec::Vec<f64> {
    let raw: alloc::vec::Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|x| *x = u);
    }
}
