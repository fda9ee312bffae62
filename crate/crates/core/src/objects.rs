//! Next-object prediction from zero-padded n-gram request histories, with
//! one discrete HMM per object.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hmm::{fit_discrete, DiscreteHmm, EmConfig};
use crate::rng::{self, tags};
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_ORDER: usize = 3;
pub const PADDING: u8 = 0;

/// The `order` requests preceding a target position, left-padded with 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectHistory {
    pub window: Vec<u8>,
    /// The request that followed, unknown for the forecast past the end.
    pub next: Option<u8>,
}

/// One history per target position from the second request up to one past
/// the end of `sequence`.
pub fn trigram_windows(sequence: &[u8], order: usize, n_objects: usize) -> Result<Vec<ObjectHistory>> {
    if !(1..=5).contains(&order) {
        return Err(Error::param("order", format!("must lie in 1..=5, got {order}")));
    }
    if sequence.is_empty() {
        return Err(Error::data("empty object sequence"));
    }
    if let Some(bad) = sequence.iter().find(|&&o| o == 0 || o as usize > n_objects) {
        return Err(Error::data(format!("object id {bad} outside 1..={n_objects}")));
    }
    Ok((1..=sequence.len())
        .map(|target| {
            let mut window = vec![PADDING; order];
            let start = target.saturating_sub(order);
            let tail = &sequence[start..target];
            window[order - tail.len()..].copy_from_slice(tail);
            ObjectHistory { window, next: sequence.get(target).copied() }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectConfig {
    pub n_objects: usize,
    pub order: usize,
    pub n_states: usize,
    pub em: EmConfig,
    /// Share of each object's histories held out to pick among restarts.
    pub validation_fraction: f64,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        ObjectConfig {
            n_objects: 6,
            order: DEFAULT_ORDER,
            n_states: 5,
            em: EmConfig { max_iter: 200, tol: 1e-6, restarts: 10 },
            validation_fraction: 0.2,
        }
    }
}

impl ObjectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects == 0 || self.n_objects > 254 {
            return Err(Error::param("n_objects", "must lie in 1..=254"));
        }
        if !(1..=5).contains(&self.order) {
            return Err(Error::param("order", "must lie in 1..=5"));
        }
        if self.n_states == 0 {
            return Err(Error::param("n_states", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::param("validation_fraction", "must lie in [0, 1)"));
        }
        self.em.validate()
    }
}

/// One HMM per object id; `models[j]` scores histories followed by `j + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModels {
    pub order: usize,
    pub models: Vec<DiscreteHmm>,
    /// False where no history of that object existed and a uniform model
    /// stands in.
    pub trained: Vec<bool>,
}

/// Random duplicates of each group until all reach the largest size.
pub fn oversample<T: Clone>(groups: &[Vec<T>], seed: u64) -> Vec<Vec<T>> {
    let mut rng = rng::stream(seed, tags::OVERSAMPLE);
    let target = groups.iter().map(Vec::len).max().unwrap_or(0);
    groups
        .iter()
        .map(|g| {
            let mut out = g.clone();
            if !g.is_empty() {
                while out.len() < target {
                    out.push(g[rng.random_range(0..g.len())].clone());
                }
            }
            out
        })
        .collect()
}

pub(crate) fn split_validation<T: Clone>(windows: &[T], fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let n_val = libm::round(windows.len() as f64 * fraction) as usize;
    if windows.len() < 5 || n_val == 0 {
        return (windows.to_vec(), Vec::new());
    }
    let mut idx: Vec<usize> = (0..windows.len()).collect();
    idx.shuffle(&mut rng::stream(seed, tags::HMM_SPLIT));
    let val = idx[..n_val].iter().map(|&i| windows[i].clone()).collect();
    let mut train_idx = idx[n_val..].to_vec();
    train_idx.sort_unstable();
    (train_idx.into_iter().map(|i| windows[i].clone()).collect(), val)
}

fn group_by_next(histories: &[ObjectHistory], cfg: &ObjectConfig) -> Result<Vec<Vec<Vec<u8>>>> {
    let mut groups: Vec<Vec<Vec<u8>>> = vec![Vec::new(); cfg.n_objects];
    for h in histories {
        if h.window.len() != cfg.order {
            return Err(Error::data(format!("history of length {} for order {}", h.window.len(), cfg.order)));
        }
        if let Some(next) = h.next {
            if next == 0 || next as usize > cfg.n_objects {
                return Err(Error::data(format!("object id {next} outside 1..={}", cfg.n_objects)));
            }
            groups[next as usize - 1].push(h.window.clone());
        }
    }
    Ok(groups)
}

/// Trains one HMM per object, picking among restarts on a random
/// `validation_fraction` of each object's histories.
pub fn train_object_models(histories: &[ObjectHistory], cfg: &ObjectConfig, seed: u64) -> Result<ObjectModels> {
    cfg.validate()?;
    let groups = group_by_next(histories, cfg)?;
    let mut train = Vec::with_capacity(cfg.n_objects);
    let mut validation = Vec::with_capacity(cfg.n_objects);
    for (j, g) in groups.iter().enumerate() {
        let (t, v) = split_validation(g, cfg.validation_fraction, rng::derive(seed, j as u64));
        train.push(t);
        validation.push(v);
    }
    fit_groups(train, validation, cfg, seed)
}

/// Like [`train_object_models`] with a given validation set, such as the
/// histories of a held-out training subject.
pub fn train_object_models_with_validation(
    train: &[ObjectHistory],
    validation: &[ObjectHistory],
    cfg: &ObjectConfig,
    seed: u64,
) -> Result<ObjectModels> {
    cfg.validate()?;
    fit_groups(group_by_next(train, cfg)?, group_by_next(validation, cfg)?, cfg, seed)
}

fn fit_groups(train: Vec<Vec<Vec<u8>>>, validation: Vec<Vec<Vec<u8>>>, cfg: &ObjectConfig, seed: u64) -> Result<ObjectModels> {
    if train.iter().all(Vec::is_empty) {
        return Err(Error::data("no object histories with a known successor"));
    }
    let train = oversample(&train, seed);
    let n_symbols = cfg.n_objects + 1;
    let mut models = Vec::with_capacity(cfg.n_objects);
    let mut trained = Vec::with_capacity(cfg.n_objects);
    for (j, (t, v)) in train.iter().zip(&validation).enumerate() {
        if t.is_empty() {
            log::warn!("object {} has no histories; using a uniform model", j + 1);
            models.push(DiscreteHmm::uniform(cfg.n_states, n_symbols));
            trained.push(false);
            continue;
        }
        let (m, _) = fit_discrete(t, v, cfg.n_states, n_symbols, &cfg.em, rng::derive(seed, 100 + j as u64))?;
        models.push(m);
        trained.push(true);
    }
    Ok(ObjectModels { order: cfg.order, models, trained })
}

/// Softmax of the log-likelihoods and the most probable object id
/// (1-based; ties pick the smallest). All-impossible inputs yield a uniform
/// distribution and object 1.
pub fn softmax_decision(log_likelihoods: &[f64]) -> (Vec<f64>, u8) {
    let lse = stats::log_sum_exp(log_likelihoods);
    if lse == f64::NEG_INFINITY || lse.is_nan() {
        let u = 1.0 / log_likelihoods.len() as f64;
        return (vec![u; log_likelihoods.len()], 1);
    }
    let probs: Vec<f64> = log_likelihoods.iter().map(|l| libm::exp(l - lse)).collect();
    let best = stats::argmax(&probs).unwrap_or(0);
    (probs, best as u8 + 1)
}

impl ObjectModels {
    pub fn log_likelihoods(&self, window: &[u8]) -> Result<Vec<f64>> {
        if window.len() != self.order {
            return Err(Error::data(format!("window of length {} for order {}", window.len(), self.order)));
        }
        self.models.iter().map(|m| m.log_likelihood(window)).collect()
    }

    pub fn predict_next(&self, window: &[u8]) -> Result<(Vec<f64>, u8)> {
        Ok(softmax_decision(&self.log_likelihoods(window)?))
    }
}

/// Predicts the most frequent successor of the last requested object seen in
/// training, falling back to the most frequent object overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigramBaseline {
    /// `counts[prev][next - 1]`, `prev` 0 for an empty history.
    pub counts: Vec<Vec<usize>>,
    pub totals: Vec<usize>,
}

impl BigramBaseline {
    pub fn fit(histories: &[ObjectHistory], n_objects: usize) -> Self {
        let mut counts = vec![vec![0; n_objects]; n_objects + 1];
        let mut totals = vec![0; n_objects];
        for h in histories {
            if let (Some(next), Some(&prev)) = (h.next, h.window.last()) {
                let (p, n) = (prev as usize, next as usize);
                if p <= n_objects && (1..=n_objects).contains(&n) {
                    counts[p][n - 1] += 1;
                    totals[n - 1] += 1;
                }
            }
        }
        BigramBaseline { counts, totals }
    }

    pub fn predict(&self, window: &[u8]) -> u8 {
        let prev = window.last().map_or(0, |&p| p as usize);
        let row = self.counts.get(prev).filter(|r| r.iter().any(|&c| c > 0)).unwrap_or(&self.totals);
        let mut best = 0;
        for (i, &c) in row.iter().enumerate() {
            if c > row[best] {
                best = i;
            }
        }
        best as u8 + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn windows_follow_padding_rule() {
        let w = trigram_windows(&[2, 1, 4], 3, 6).unwrap();
        assert_eq!(w[0], ObjectHistory { window: vec![0, 0, 2], next: Some(1) });
        assert_eq!(w[1], ObjectHistory { window: vec![0, 2, 1], next: Some(4) });
        assert_eq!(w[2], ObjectHistory { window: vec![2, 1, 4], next: None });

        let w = trigram_windows(&[3, 1, 2, 6, 5], 3, 6).unwrap();
        assert_eq!(w[3], ObjectHistory { window: vec![1, 2, 6], next: Some(5) });

        let w = trigram_windows(&[4], 3, 6).unwrap();
        assert_eq!(w, vec![ObjectHistory { window: vec![0, 0, 4], next: None }]);

        assert!(trigram_windows(&[7], 3, 6).is_err());
        assert!(trigram_windows(&[0, 1], 3, 6).is_err());
        assert!(trigram_windows(&[1], 6, 6).is_err());
    }

    #[test]
    fn oversampling_balances_with_duplicates_only() {
        let groups = vec![(0..10).collect::<Vec<u32>>(), (100..120).collect()];
        let out = oversample(&groups, 3);
        assert_eq!(out[0].len(), 20);
        assert_eq!(out[1], groups[1]);
        assert!(out[0].iter().all(|x| groups[0].contains(x)));
        assert_eq!(out, oversample(&groups, 3));
    }

    #[test]
    fn softmax_examples() {
        let (p, j) = softmax_decision(&[-3.0; 6]);
        assert!(p.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
        assert_eq!(j, 1);
        let probs: [f64; 6] = [0.1, 0.5, 0.2, 0.1, 0.05, 0.05];
        let logs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        assert_eq!(softmax_decision(&logs).1, 2);
        let (p, j) = softmax_decision(&[f64::NEG_INFINITY; 6]);
        assert_eq!((p[0], j), (1.0 / 6.0, 1));
    }

    fn toy_histories() -> Vec<ObjectHistory> {
        let seqs: [&[u8]; 3] = [&[1, 2, 3, 1, 2, 3, 1, 2, 3], &[1, 2, 3, 1, 2, 3], &[2, 3, 1, 2, 3, 1, 2]];
        seqs.iter().flat_map(|s| trigram_windows(s, 3, 3).unwrap()).collect()
    }

    #[test]
    fn models_learn_a_cycle() {
        let cfg = ObjectConfig { n_objects: 3, n_states: 2, em: EmConfig { restarts: 3, ..Default::default() }, ..Default::default() };
        let models = train_object_models(&toy_histories(), &cfg, 1).unwrap();
        assert_eq!(models.models.len(), 3);
        assert!(models.trained.iter().all(|&t| t));
        assert_eq!(models.predict_next(&[2, 3, 1]).unwrap().1, 2);
        assert_eq!(models.predict_next(&[3, 1, 2]).unwrap().1, 3);
        assert_eq!(models, train_object_models(&toy_histories(), &cfg, 1).unwrap());
    }

    #[test]
    fn missing_object_gets_uniform_model() {
        let cfg = ObjectConfig { n_objects: 4, n_states: 2, em: EmConfig { restarts: 1, ..Default::default() }, ..Default::default() };
        let models = train_object_models(&toy_histories(), &cfg, 1).unwrap();
        assert_eq!(models.trained, vec![true, true, true, false]);
    }

    #[test]
    fn bigram_predicts_frequent_successor() {
        let b = BigramBaseline::fit(&toy_histories(), 3);
        assert_eq!(b.predict(&[0, 0, 1]), 2);
        assert_eq!(b.predict(&[1, 2, 3]), 1);
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(logs in proptest::collection::vec(-50.0f64..0.0, 6), shift in -100.0f64..100.0) {
            let (p, j) = softmax_decision(&logs);
            let shifted: Vec<f64> = logs.iter().map(|l| l + shift).collect();
            let (q, k) = softmax_decision(&shifted);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert_eq!(j, k);
        }
    }
}
