use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::{forward_log_likelihood, Posteriors};
use super::{check_distribution, normalize, random_distribution, EmConfig, EmTrace};
use crate::dataset::ObservationMatrix;
use crate::rng;
use crate::{Error, Result};

/// Lower bound applied to every emission variance.
pub const VARIANCE_FLOOR: f64 = 1e-4;

/// HMM with one diagonal-covariance Gaussian per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianHmm {
    pub pi: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    /// `states x dim`.
    pub means: Vec<Vec<f64>>,
    /// `states x dim`, each at least [`VARIANCE_FLOOR`].
    pub vars: Vec<Vec<f64>>,
}

impl GaussianHmm {
    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_states();
        if k == 0 || self.trans.len() != k || self.means.len() != k || self.vars.len() != k {
            return Err(Error::data("gaussian hmm matrices disagree on the state count"));
        }
        check_distribution("pi", &self.pi)?;
        for row in &self.trans {
            check_distribution("transition row", row)?;
        }
        let d = self.dim();
        for (m, v) in self.means.iter().zip(&self.vars) {
            if m.len() != d || v.len() != d {
                return Err(Error::data("gaussian hmm rows differ in dimension"));
            }
            if m.iter().any(|x| !x.is_finite()) || v.iter().any(|&x| !(x >= VARIANCE_FLOOR) || !x.is_finite()) {
                return Err(Error::data("gaussian hmm has invalid means or variances"));
            }
        }
        Ok(())
    }

    fn log_emissions(&self, obs: &ObservationMatrix) -> Result<Vec<f64>> {
        if obs.cols() != self.dim() {
            return Err(Error::data(alloc::format!("expected {} channels, got {}", self.dim(), obs.cols())));
        }
        let k = self.n_states();
        let norm: Vec<f64> = self
            .vars
            .iter()
            .map(|v| -0.5 * v.iter().map(|&s| libm::log(2.0 * PI * s)).sum::<f64>())
            .collect();
        let mut out = Vec::with_capacity(obs.rows() * k);
        for r in 0..obs.rows() {
            let x = obs.row(r);
            for j in 0..k {
                let mut q = 0.0;
                for ((xi, m), v) in x.iter().zip(&self.means[j]).zip(&self.vars[j]) {
                    let d = xi - m;
                    q += d * d / v;
                }
                out.push(norm[j] - 0.5 * q);
            }
        }
        Ok(out)
    }

    pub fn log_likelihood(&self, obs: &ObservationMatrix) -> Result<f64> {
        Ok(forward_log_likelihood(&self.pi, &self.trans, &self.log_emissions(obs)?))
    }

    /// One Baum-Welch iteration; returns the log-likelihood before it.
    pub fn em_step(&mut self, sequences: &[ObservationMatrix]) -> Result<f64> {
        let (k, d) = (self.n_states(), self.dim());
        let mut pi = vec![0.0; k];
        let mut trans = vec![vec![0.0; k]; k];
        let mut weight = vec![0.0; k];
        let mut sum = vec![vec![0.0; d]; k];
        let mut sum_sq = vec![vec![0.0; d]; k];
        let mut total = 0.0;
        for seq in sequences.iter().filter(|s| s.rows() > 0) {
            let post = Posteriors::compute(&self.pi, &self.trans, &self.log_emissions(seq)?)
                .ok_or_else(|| Error::degenerate("sequence has zero probability"))?;
            total += post.log_likelihood;
            for j in 0..k {
                pi[j] += post.gamma[j];
                for i in 0..k {
                    trans[j][i] += post.xi_sum[j * k + i];
                }
            }
            for r in 0..seq.rows() {
                let x = seq.row(r);
                for j in 0..k {
                    let g = post.gamma[r * k + j];
                    weight[j] += g;
                    for (c, &xc) in x.iter().enumerate() {
                        sum[j][c] += g * xc;
                        sum_sq[j][c] += g * xc * xc;
                    }
                }
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("gaussian hmm log-likelihood".into()));
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
        for j in 0..k {
            if weight[j] <= 1e-12 {
                continue;
            }
            for c in 0..d {
                let m = sum[j][c] / weight[j];
                let v = sum_sq[j][c] / weight[j] - m * m;
                self.means[j][c] = m;
                self.vars[j][c] = v.max(VARIANCE_FLOOR);
            }
        }
        Ok(total)
    }

    pub fn train(&mut self, sequences: &[ObservationMatrix], cfg: &EmConfig) -> Result<EmTrace> {
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

    /// Random transitions, means at randomly chosen frames and the pooled
    /// per-channel variance.
    fn init<R: Rng + ?Sized>(rng: &mut R, n_states: usize, frames: &[&[f64]], pooled_var: &[f64]) -> Self {
        GaussianHmm {
            pi: random_distribution(rng, n_states),
            trans: (0..n_states).map(|_| random_distribution(rng, n_states)).collect(),
            means: (0..n_states).map(|_| frames[rng.random_range(0..frames.len())].to_vec()).collect(),
            vars: (0..n_states).map(|_| pooled_var.to_vec()).collect(),
        }
    }
}

/// Restarted Baum-Welch for Gaussian HMMs; selection as in
/// [`super::fit_discrete`].
pub fn fit_gaussian(
    train: &[ObservationMatrix],
    validation: &[ObservationMatrix],
    n_states: usize,
    cfg: &EmConfig,
    seed: u64,
) -> Result<(GaussianHmm, Vec<EmTrace>)> {
    cfg.validate()?;
    if n_states == 0 {
        return Err(Error::param("n_states", "must be positive"));
    }
    let frames: Vec<&[f64]> = train.iter().flat_map(|s| (0..s.rows()).map(move |r| s.row(r))).collect();
    if frames.is_empty() {
        return Err(Error::data("no training frames"));
    }
    let d = frames[0].len();
    if train.iter().chain(validation).any(|s| s.cols() != d) {
        return Err(Error::data("training sequences differ in channel count"));
    }
    let pooled_var: Vec<f64> = (0..d)
        .map(|c| {
            let col: Vec<f64> = frames.iter().map(|f| f[c]).collect();
            crate::stats::variance(&col).max(VARIANCE_FLOOR)
        })
        .collect();
    let mut best: Option<(f64, GaussianHmm)> = None;
    let mut traces = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let mut rng = rng::stream(rng::derive(seed, r as u64), rng::tags::HMM_INIT);
        let mut model = GaussianHmm::init(&mut rng, n_states, &frames, &pooled_var);
        traces.push(model.train(train, cfg)?);
        let eval = if validation.is_empty() { train } else { validation };
        let score = eval.iter().map(|s| model.log_likelihood(s)).sum::<Result<f64>>()?;
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, model));
        }
    }
    Ok((best.expect("at least one restart").1, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn matrix(rows: &[Vec<f64>]) -> ObservationMatrix {
        let names = (0..rows[0].len()).map(|i| alloc::format!("c{i}")).collect::<Vec<String>>();
        ObservationMatrix::from_rows(rows, 20.0, names).unwrap()
    }

    #[test]
    fn one_state_recovers_moments() {
        let a = matrix(&[vec![1.0, 0.0], vec![3.0, 0.0], vec![2.0, 0.0]]);
        let b = matrix(&[vec![6.0, 0.0]]);
        let (m, _) = fit_gaussian(&[a, b], &[], 1, &EmConfig { restarts: 1, ..Default::default() }, 0).unwrap();
        assert!((m.means[0][0] - 3.0).abs() < 1e-9);
        assert!((m.vars[0][0] - 3.5).abs() < 1e-9);
        assert_eq!(m.vars[0][1], VARIANCE_FLOOR);
        m.validate().unwrap();
    }

    #[test]
    fn em_is_monotone() {
        let mut r = rng::stream(3, 0);
        let seqs: Vec<ObservationMatrix> = (0..12)
            .map(|i| {
                let rows: Vec<Vec<f64>> = (0..10)
                    .map(|t| vec![if t < 5 { 0.0 } else { 3.0 } + rng::normal(&mut r), (i % 3) as f64 + rng::normal(&mut r)])
                    .collect();
                matrix(&rows)
            })
            .collect();
        let (m, traces) = fit_gaussian(&seqs, &[], 3, &EmConfig { restarts: 3, ..Default::default() }, 5).unwrap();
        m.validate().unwrap();
        for t in traces {
            for w in t.log_likelihoods.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let a = matrix(&[vec![1.0, 0.0], vec![3.0, 0.0]]);
        let b = matrix(&[vec![1.0], vec![2.0]]);
        assert!(fit_gaussian(&[a, b], &[], 2, &EmConfig::default(), 0).is_err());
    }
}
