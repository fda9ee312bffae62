//! Firing maps and the descriptors computed from them.

mod png;

pub use png::{extract_png, jaccard, lcs_similarity, IndexedPng, NeuronSet, PngGroup, MAX_SET_NEURONS};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 25;
/// Extra simulated time after the last stimulus counted when normalizing
/// partial observations.
pub const SETTLE_MS: usize = 50;

/// Sparse record of which neuron fired at which millisecond.
///
/// Firings are kept sorted by `(time, neuron)`, times run from 1 to
/// `duration`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiringMap {
    n_neurons: usize,
    duration: u16,
    fired: Vec<(u16, u16)>,
}

impl FiringMap {
    pub fn empty(n_neurons: usize, duration: u16) -> Self {
        FiringMap { n_neurons, duration, fired: Vec::new() }
    }

    /// Builds a map from `(neuron, time)` pairs in any order.
    pub fn from_firings(n_neurons: usize, duration: u16, mut fired: Vec<(u16, u16)>) -> Result<Self> {
        for &(n, t) in &fired {
            if n as usize >= n_neurons || t == 0 || t > duration {
                return Err(Error::data(format!("firing ({n}, {t}) outside {n_neurons}x{duration}")));
            }
        }
        fired.sort_by_key(|&(n, t)| (t, n));
        fired.dedup();
        Ok(FiringMap { n_neurons, duration, fired })
    }

    /// Appends a firing; callers guarantee time order.
    #[inline]
    pub(crate) fn push(&mut self, neuron: u16, time: u16) {
        debug_assert!(self.fired.last().is_none_or(|&(n, t)| (t, n) < (time, neuron)));
        self.fired.push((neuron, time));
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn duration(&self) -> u16 {
        self.duration
    }

    /// `(neuron, time)` pairs sorted by time then neuron.
    pub fn firings(&self) -> &[(u16, u16)] {
        &self.fired
    }

    pub fn len(&self) -> usize {
        self.fired.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fired.is_empty()
    }

    pub fn fired(&self, neuron: u16, time: u16) -> bool {
        self.fired.binary_search_by_key(&(time, neuron), |&(n, t)| (t, n)).is_ok()
    }

    /// Firings up to and including `time`.
    pub fn truncated(&self, time: u16) -> FiringMap {
        let end = self.fired.partition_point(|&(_, t)| t <= time);
        FiringMap { n_neurons: self.n_neurons, duration: self.duration, fired: self.fired[..end].to_vec() }
    }
}

/// Normalization span for a window of `rows` stimulated rows.
pub fn effective_duration(rows: usize, full_ms: usize, fixed: bool) -> usize {
    if fixed {
        full_ms
    } else {
        (5 * rows + SETTLE_MS).min(full_ms)
    }
}

/// Per-map histograms of firings over equal-width neuron bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NhnfDescriptor {
    pub maps: usize,
    pub bins: usize,
    pub simulated_ms: f64,
    /// Row-major `maps x bins`.
    pub values: Vec<f64>,
}

impl NhnfDescriptor {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.bins..(i + 1) * self.bins]
    }
}

/// `h[i][b]` is the number of firings in map `i` from neurons of bin `b`,
/// divided by `t_effective`.
pub fn nhnf(maps: &[FiringMap], bins: usize, t_effective: f64) -> Result<NhnfDescriptor> {
    if !(t_effective >= 1.0) {
        return Err(Error::param("t_effective", format!("must be at least 1 ms, got {t_effective}")));
    }
    let mut values = vec![0.0; maps.len() * bins];
    for (i, map) in maps.iter().enumerate() {
        let n = map.n_neurons();
        if bins == 0 || n % bins != 0 {
            return Err(Error::param("bins", format!("{bins} does not divide {n} neurons")));
        }
        let width = n / bins;
        let row = &mut values[i * bins..(i + 1) * bins];
        for &(neuron, _) in map.firings() {
            row[neuron as usize / width] += 1.0;
        }
        for v in row.iter_mut() {
            *v /= t_effective;
        }
    }
    Ok(NhnfDescriptor { maps: maps.len(), bins, simulated_ms: t_effective, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_firing() {
        let m = FiringMap::from_firings(250, 250, vec![(3, 17)]).unwrap();
        let h = nhnf(&[m], 25, 250.0).unwrap();
        assert!((h.values[0] - 0.004).abs() < 1e-15);
        assert!(h.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_and_scaling() {
        let h = nhnf(&[FiringMap::empty(250, 250)], 25, 250.0).unwrap();
        assert!(h.values.iter().all(|&v| v == 0.0));

        let m = FiringMap::from_firings(250, 250, vec![(3, 1), (40, 2), (41, 2), (249, 250)]).unwrap();
        let a = nhnf(std::slice::from_ref(&m), 25, 100.0).unwrap();
        let b = nhnf(&[m], 25, 200.0).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x / 2.0 - y).abs() < 1e-15);
        }
        assert_eq!(a.row(0)[4], 2.0 / 100.0);
    }

    #[test]
    fn rejects_bad_bins() {
        assert!(nhnf(&[FiringMap::empty(250, 250)], 24, 250.0).is_err());
        assert!(nhnf(&[FiringMap::empty(250, 250)], 25, 0.0).is_err());
    }

    #[test]
    fn map_validation_and_lookup() {
        assert!(FiringMap::from_firings(250, 250, vec![(250, 1)]).is_err());
        assert!(FiringMap::from_firings(250, 250, vec![(0, 0)]).is_err());
        let m = FiringMap::from_firings(10, 5, vec![(2, 4), (1, 4), (7, 1)]).unwrap();
        assert_eq!(m.firings(), &[(7, 1), (1, 4), (2, 4)]);
        assert!(m.fired(1, 4) && !m.fired(1, 1));
        assert_eq!(m.truncated(3).len(), 1);
    }

    #[test]
    fn effective_window() {
        assert_eq!(effective_duration(4, 250, false), 70);
        assert_eq!(effective_duration(40, 250, false), 250);
        assert_eq!(effective_duration(4, 250, true), 250);
    }

    proptest! {
        #[test]
        fn totals_preserved(firings in proptest::collection::vec((0u16..250, 1u16..=250), 0..200), t in 1.0f64..500.0) {
            let m = FiringMap::from_firings(250, 250, firings).unwrap();
            let h = nhnf(std::slice::from_ref(&m), 25, t).unwrap();
            prop_assert!(h.values.iter().all(|&v| v >= 0.0));
            let total: f64 = h.values.iter().sum::<f64>() * t;
            prop_assert!((total - m.len() as f64).abs() < 1e-9);
        }

        #[test]
        fn invariant_to_neuron_within_bin(firings in proptest::collection::vec((0u16..25, 1u16..=250), 1..50), shift in 0u16..10) {
            // Moving each firing to another neuron of the same bin keeps the histogram.
            let a: Vec<(u16, u16)> = firings.iter().map(|&(b, t)| (b * 10, t)).collect();
            let b: Vec<(u16, u16)> = firings.iter().map(|&(b, t)| (b * 10 + shift, t)).collect();
            let ma = FiringMap::from_firings(250, 250, a).unwrap();
            let mb = FiringMap::from_firings(250, 250, b).unwrap();
            prop_assume!(ma.len() == mb.len());
            prop_assert_eq!(nhnf(&[ma], 25, 250.0).unwrap(), nhnf(&[mb], 25, 250.0).unwrap());
        }
    }
}
