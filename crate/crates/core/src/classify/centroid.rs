use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{check_training_set, Classifier};
use crate::Result;

/// Assigns the class of the nearest (Euclidean) class mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestCentroid {
    pub centroids: [Vec<f64>; 2],
}

impl NearestCentroid {
    pub fn fit(x: &[Vec<f64>], y: &[u8]) -> Result<Self> {
        check_training_set(x, y)?;
        let d = x[0].len();
        let mut sums = [vec![0.0; d], vec![0.0; d]];
        let mut counts = [0usize; 2];
        for (row, &label) in x.iter().zip(y) {
            let c = usize::from(label != 0);
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..2 {
            sums[c].iter_mut().for_each(|s| *s /= counts[c] as f64);
        }
        Ok(NearestCentroid { centroids: sums })
    }
}

impl Classifier for NearestCentroid {
    /// Squared distance to the class-0 centroid minus that to class 1.
    /// Exact ties map to a tiny negative score so they go to class 0.
    fn score(&self, x: &[f64]) -> f64 {
        let dist = |c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let s = dist(&self.centroids[0]) - dist(&self.centroids[1]);
        if s == 0.0 {
            -f64::MIN_POSITIVE
        } else {
            s
        }
    }
}
