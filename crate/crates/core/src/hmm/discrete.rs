use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::engine::{forward_log_likelihood, Posteriors};
use super::{check_distribution, normalize, random_distribution, EmConfig, EmTrace};
use crate::rng;
use crate::{Error, Result};

/// HMM over symbols `0..n_symbols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteHmm {
    pub pi: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    /// `states x symbols` emission probabilities.
    pub emit: Vec<Vec<f64>>,
}

impl DiscreteHmm {
    pub fn uniform(n_states: usize, n_symbols: usize) -> Self {
        DiscreteHmm {
            pi: vec![1.0 / n_states as f64; n_states],
            trans: vec![vec![1.0 / n_states as f64; n_states]; n_states],
            emit: vec![vec![1.0 / n_symbols as f64; n_symbols]; n_states],
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, n_states: usize, n_symbols: usize) -> Self {
        DiscreteHmm {
            pi: random_distribution(rng, n_states),
            trans: (0..n_states).map(|_| random_distribution(rng, n_states)).collect(),
            emit: (0..n_states).map(|_| random_distribution(rng, n_symbols)).collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.emit.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_states();
        if k == 0 || self.trans.len() != k || self.emit.len() != k {
            return Err(Error::data("hmm matrices disagree on the state count"));
        }
        check_distribution("pi", &self.pi)?;
        for row in &self.trans {
            if row.len() != k {
                return Err(Error::data("transition matrix is not square"));
            }
            check_distribution("transition row", row)?;
        }
        for row in &self.emit {
            if row.len() != self.n_symbols() || row.is_empty() {
                return Err(Error::data("emission rows differ in length"));
            }
            check_distribution("emission row", row)?;
        }
        Ok(())
    }

    fn log_emissions(&self, obs: &[u8]) -> Result<Vec<f64>> {
        let k = self.n_states();
        let mut out = Vec::with_capacity(obs.len() * k);
        for &o in obs {
            if o as usize >= self.n_symbols() {
                return Err(Error::data(format!("symbol {o} outside alphabet of {}", self.n_symbols())));
            }
            out.extend(self.emit.iter().map(|row| libm::log(row[o as usize])));
        }
        Ok(out)
    }

    /// `ln P(obs | model)`; negative infinity for impossible sequences.
    pub fn log_likelihood(&self, obs: &[u8]) -> Result<f64> {
        Ok(forward_log_likelihood(&self.pi, &self.trans, &self.log_emissions(obs)?))
    }

    /// One Baum-Welch iteration. Returns the total log-likelihood of the
    /// sequences under the parameters before the update.
    pub fn em_step(&mut self, sequences: &[Vec<u8>]) -> Result<f64> {
        let (k, s) = (self.n_states(), self.n_symbols());
        let mut pi = vec![0.0; k];
        let mut trans = vec![vec![0.0; k]; k];
        let mut emit = vec![vec![0.0; s]; k];
        let mut total = 0.0;
        for seq in sequences.iter().filter(|q| !q.is_empty()) {
            let post = Posteriors::compute(&self.pi, &self.trans, &self.log_emissions(seq)?)
                .ok_or_else(|| Error::degenerate("training sequence has zero probability"))?;
            total += post.log_likelihood;
            for j in 0..k {
                pi[j] += post.gamma[j];
                for i in 0..k {
                    trans[j][i] += post.xi_sum[j * k + i];
                }
            }
            for (t, &o) in seq.iter().enumerate() {
                for j in 0..k {
                    emit[j][o as usize] += post.gamma[t * k + j];
                }
            }
        }
        normalize(&mut pi);
        self.pi = pi;
        for (row, old) in trans.iter_mut().zip(&self.trans) {
            if row.iter().sum::<f64>() > 0.0 {
                normalize(row);
            } else {
                row.copy_from_slice(old);
            }
        }
        self.trans = trans;
        for (row, old) in emit.iter_mut().zip(&self.emit) {
            if row.iter().sum::<f64>() > 0.0 {
                normalize(row);
            } else {
                row.copy_from_slice(old);
            }
        }
        self.emit = emit;
        Ok(total)
    }

    /// Runs Baum-Welch from the current parameters until the gain drops
    /// below `tol` or `max_iter` likelihood evaluations have been made.
    pub fn train(&mut self, sequences: &[Vec<u8>], cfg: &EmConfig) -> Result<EmTrace> {
        let mut trace = EmTrace::default();
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..cfg.max_iter {
            let before = self.clone();
            let ll = self.em_step(sequences)?;
            trace.log_likelihoods.push(ll);
            if ll - prev < cfg.tol {
                *self = before;
                break;
            }
            prev = ll;
        }
        Ok(trace)
    }
}

/// Baum-Welch with `cfg.restarts` seeded random initializations. The
/// restart with the best `validation` log-likelihood wins, or the best
/// training log-likelihood when `validation` is empty; ties keep the
/// earlier restart.
pub fn fit_discrete(
    train: &[Vec<u8>],
    validation: &[Vec<u8>],
    n_states: usize,
    n_symbols: usize,
    cfg: &EmConfig,
    seed: u64,
) -> Result<(DiscreteHmm, Vec<EmTrace>)> {
    cfg.validate()?;
    if n_states == 0 || n_symbols == 0 {
        return Err(Error::param("n_states", "state and symbol counts must be positive"));
    }
    if train.iter().all(Vec::is_empty) {
        return Err(Error::data("no training sequences"));
    }
    let mut best: Option<(f64, DiscreteHmm)> = None;
    let mut traces = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let mut rng = rng::stream(rng::derive(seed, r as u64), rng::tags::HMM_INIT);
        let mut model = DiscreteHmm::random(&mut rng, n_states, n_symbols);
        traces.push(model.train(train, cfg)?);
        let score = if validation.is_empty() {
            train.iter().map(|s| model.log_likelihood(s)).sum::<Result<f64>>()?
        } else {
            validation.iter().map(|s| model.log_likelihood(s)).sum::<Result<f64>>()?
        };
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, model));
        }
    }
    Ok((best.expect("at least one restart").1, traces))
}
