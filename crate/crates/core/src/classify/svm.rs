use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_set, Classifier};
use crate::rng::{self, tags};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Hinge-loss weight; the regularizer is `1 / (c * n)`.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, epochs: 40, seed: 0 }
    }
}

/// `score(x) = w . x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Classifier for LinearSvm {
    fn score(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn dot_aug(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[d] + x.iter().zip(&w[..d]).map(|(a, b)| a * b).sum::<f64>()
}

/// `lambda / 2 |w|^2 + mean hinge`, with the bias folded into `w` as a
/// constant feature.
fn objective(w: &[f64], x: &[Vec<f64>], signs: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = x.iter().zip(signs).map(|(xi, &s)| (1.0 - s * dot_aug(w, xi)).max(0.0)).sum();
    reg + hinge / x.len() as f64
}

impl LinearSvm {
    /// Stochastic subgradient descent (Pegasos) on the L2-regularized hinge
    /// loss. The running average of the iterates is scored after every
    /// epoch and the best one seen is kept, so the returned per-epoch
    /// objective trace never increases.
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &SvmConfig) -> Result<(LinearSvm, Vec<f64>)> {
        check_training_set(x, y)?;
        if !(cfg.c > 0.0 && cfg.c.is_finite()) {
            return Err(Error::param("c", "must be positive and finite"));
        }
        if cfg.epochs == 0 {
            return Err(Error::param("epochs", "must be positive"));
        }
        let n = x.len();
        let d = x[0].len();
        let lambda = 1.0 / (cfg.c * n as f64);
        let radius = 1.0 / libm::sqrt(lambda);
        let signs: Vec<f64> = y.iter().map(|&l| if l != 0 { 1.0 } else { -1.0 }).collect();
        let mut rng = rng::stream(cfg.seed, tags::SVM);
        let mut order: Vec<usize> = (0..n).collect();
        let mut w = vec![0.0; d + 1];
        let mut avg = vec![0.0; d + 1];
        let mut best = avg.clone();
        let mut best_obj = objective(&best, x, &signs, lambda);
        let mut trace = Vec::with_capacity(cfg.epochs);
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = signs[i] * dot_aug(&w, &x[i]);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    let step = eta * signs[i];
                    for (wj, xj) in w.iter_mut().zip(&x[i]) {
                        *wj += step * xj;
                    }
                    w[d] += step;
                }
                let norm = libm::sqrt(w.iter().map(|v| v * v).sum::<f64>());
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|v| *v *= s);
                }
                let k = 1.0 / t as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) * k;
                }
            }
            let obj = objective(&avg, x, &signs, lambda);
            if obj < best_obj {
                best_obj = obj;
                best.copy_from_slice(&avg);
            }
            trace.push(best_obj);
        }
        let bias = best[d];
        best.truncate(d);
        Ok((LinearSvm { weights: best, bias }, trace))
    }
}
