//! Binary classifiers over dense feature vectors.
//!
//! Every classifier exposes a real score whose sign is the decision:
//! `decide(x) == 1` exactly when `score(x) >= 0`.

mod centroid;
mod grid;
mod standardize;
mod svm;

pub use centroid::NearestCentroid;
pub use grid::{grid_search, kfold_indices, GridResult};
pub use standardize::Standardizer;
pub use svm::{LinearSvm, SvmConfig};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub trait Classifier {
    fn score(&self, x: &[f64]) -> f64;

    fn decide(&self, x: &[f64]) -> u8 {
        u8::from(self.score(x) >= 0.0)
    }
}

/// Which classifier to fit and the hyperparameters to search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    LinearSvm {
        /// Candidate regularization constants, searched by 5-fold CV.
        c_grid: Vec<f64>,
        epochs: usize,
    },
    NearestCentroid,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::LinearSvm { c_grid: alloc::vec![0.01, 0.1, 1.0, 10.0], epochs: 40 }
    }
}

/// A fitted classifier of any supported kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    LinearSvm(LinearSvm),
    NearestCentroid(NearestCentroid),
}

impl Classifier for ClassifierModel {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            ClassifierModel::LinearSvm(m) => m.score(x),
            ClassifierModel::NearestCentroid(m) => m.score(x),
        }
    }
}

impl ClassifierModel {
    pub fn dim(&self) -> usize {
        match self {
            ClassifierModel::LinearSvm(m) => m.weights.len(),
            ClassifierModel::NearestCentroid(m) => m.centroids[0].len(),
        }
    }
}

/// Fits `cfg` on `(x, y)`, choosing hyperparameters by stratified 5-fold
/// cross-validation where the config lists more than one candidate.
pub fn fit_classifier(x: &[Vec<f64>], y: &[u8], cfg: &ClassifierConfig, seed: u64) -> Result<ClassifierModel> {
    check_training_set(x, y)?;
    match cfg {
        ClassifierConfig::NearestCentroid => Ok(ClassifierModel::NearestCentroid(NearestCentroid::fit(x, y)?)),
        ClassifierConfig::LinearSvm { c_grid, epochs } => {
            if c_grid.is_empty() {
                return Err(Error::param("c_grid", "needs at least one value"));
            }
            let candidates: Vec<SvmConfig> =
                c_grid.iter().map(|&c| SvmConfig { c, epochs: *epochs, seed }).collect();
            let best = if candidates.len() == 1 {
                candidates[0]
            } else {
                let fit = |cfg: &SvmConfig, xs: &[Vec<f64>], ys: &[u8]| LinearSvm::fit(xs, ys, cfg).map(|(m, _)| m);
                let result = grid_search(x, y, &candidates, 5, seed, fit)?;
                candidates[result.best]
            };
            Ok(ClassifierModel::LinearSvm(LinearSvm::fit(x, y, &best)?.0))
        }
    }
}

pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[u8]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::data("features and labels differ in length"));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::degenerate("classifier needs examples of both classes"));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::data("feature rows differ in width"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classifier features".into()));
    }
    Ok(())
}
