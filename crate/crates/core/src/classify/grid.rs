use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::Classifier;
use crate::metrics::Confusion;
use crate::rng::{self, tags};
use crate::{Error, Result};

/// Stratified fold assignment: each class is shuffled and dealt round-robin
/// over `k` folds.
pub fn kfold_indices(y: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, tags::GRID_SPLIT);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| (y[i] != 0) == (class != 0)).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: usize,
    /// Mean validation F1 per candidate.
    pub scores: Vec<f64>,
}

/// Scores every candidate by mean held-out F1 over `k` stratified folds.
/// Ties keep the earliest candidate.
pub fn grid_search<C, M, F>(x: &[Vec<f64>], y: &[u8], candidates: &[C], k: usize, seed: u64, fit: F) -> Result<GridResult>
where
    M: Classifier,
    F: Fn(&C, &[Vec<f64>], &[u8]) -> Result<M>,
{
    if candidates.is_empty() {
        return Err(Error::param("candidates", "grid is empty"));
    }
    if k < 2 {
        return Err(Error::param("k", "need at least two folds"));
    }
    let folds = kfold_indices(y, k, seed);
    let mut scores = vec![0.0; candidates.len()];
    for f in 0..k {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..y.len() {
            if folds[i] == f {
                vx.push(x[i].clone());
                vy.push(y[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        for (c, cand) in candidates.iter().enumerate() {
            let model = fit(cand, &tx, &ty)?;
            let preds: Vec<u8> = vx.iter().map(|v| model.decide(v)).collect();
            scores[c] += Confusion::from_predictions(&vy, &preds)?.f1() / k as f64;
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(GridResult { best, scores })
}
