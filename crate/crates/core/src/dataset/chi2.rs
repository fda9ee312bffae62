use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::filters::{apply_filter, FilterId};
use super::Corpus;
use crate::{stats, Error, Result};

/// Quantile bins used to discretize a continuous feature for the test.
pub const CHI2_BINS: usize = 10;

/// A (channel, filter) pair; orders lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub channel: usize,
    pub filter: FilterId,
}

impl FeatureKey {
    pub fn label(&self, channel_names: &[String]) -> String {
        let name = channel_names.get(self.channel).map_or("?", String::as_str);
        format!("{name}+{}", self.filter.name())
    }
}

/// Selected features, best first, with their test statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub selected: Vec<FeatureKey>,
    pub chi2_scores: Vec<f64>,
}

impl FeatureSpec {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.selected.is_empty() {
            return Err(Error::data("feature spec selects nothing"));
        }
        if self.selected.len() != self.chi2_scores.len() {
            return Err(Error::data("feature spec scores do not match selection"));
        }
        let mut keys = self.selected.clone();
        keys.sort();
        keys.dedup();
        if keys.len() != self.selected.len() {
            return Err(Error::data("feature spec has duplicate pairs"));
        }
        if self.chi2_scores.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::data("feature spec scores are not sorted descending"));
        }
        Ok(())
    }
}

fn bin_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let s = stats::sorted(values);
    (1..bins).map(|i| s[(i * s.len() / bins).min(s.len() - 1)]).collect()
}

/// Chi-square statistic of the (quantile bin x label) contingency table.
///
/// Bin edges are order statistics of the pooled values, so any strictly
/// increasing transform of the feature yields the same table.
pub fn chi2_statistic(values: &[f64], labels: &[u8], bins: usize) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::data("values and labels differ in length"));
    }
    if values.is_empty() {
        return Err(Error::data("no samples"));
    }
    let edges = bin_edges(values, bins.max(1));
    let mut table = vec![[0usize; 2]; bins.max(1)];
    for (v, &y) in values.iter().zip(labels) {
        let b = edges.partition_point(|e| e <= v);
        table[b][usize::from(y.min(1))] += 1;
    }
    let n = values.len() as f64;
    let class_totals = [table.iter().map(|r| r[0]).sum::<usize>(), table.iter().map(|r| r[1]).sum::<usize>()];
    if class_totals.contains(&0) {
        return Err(Error::degenerate("chi-square test needs both classes"));
    }
    let mut chi2 = 0.0;
    for row in &table {
        let row_total = (row[0] + row[1]) as f64;
        if row_total == 0.0 {
            continue;
        }
        for (observed, &class_total) in row.iter().zip(&class_totals) {
            let expected = row_total * class_total as f64 / n;
            let d = *observed as f64 - expected;
            chi2 += d * d / expected;
        }
    }
    Ok(chi2)
}

/// Ranks every (channel, filter) pair by chi-square dependence on the label
/// and keeps the top `num_features`. Every sample row carries its event's
/// label. Ties keep (channel, filter) order.
pub fn chi2_rank(corpus: &Corpus, num_features: usize) -> Result<FeatureSpec> {
    corpus.require_both_classes()?;
    let channels = corpus.n_channels();
    if num_features == 0 || num_features > FilterId::ALL.len() * channels {
        return Err(Error::param(
            "num_features",
            format!("must lie in 1..={}, got {num_features}", FilterId::ALL.len() * channels),
        ));
    }
    let labels: Vec<u8> =
        corpus.events.iter().flat_map(|e| core::iter::repeat_n(e.label(), e.observation.rows())).collect();
    let mut scored: Vec<(FeatureKey, f64)> = Vec::with_capacity(channels * FilterId::ALL.len());
    for channel in 0..channels {
        let columns: Vec<Vec<f64>> = corpus.events.iter().map(|e| e.observation.column(channel)).collect();
        for filter in FilterId::ALL {
            let values: Vec<f64> = columns.iter().flat_map(|c| apply_filter(c, filter)).collect();
            scored.push((FeatureKey { channel, filter }, chi2_statistic(&values, &labels, CHI2_BINS)?));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(num_features);
    Ok(FeatureSpec {
        selected: scored.iter().map(|s| s.0).collect(),
        chi2_scores: scored.iter().map(|s| s.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{ObservationMatrix, TurnEvent, TurnKind};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn independent_feature_scores_zero() {
        let values: Vec<f64> = (0..200).map(|i| (i / 2) as f64).collect();
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        assert!(chi2_statistic(&values, &labels, 10).unwrap() < 1e-9);
    }

    #[test]
    fn separating_feature_scores_high() {
        let values: Vec<f64> = (0..200).map(f64::from).collect();
        let labels: Vec<u8> = (0..200).map(|i| u8::from(i >= 100)).collect();
        // Disjoint bins: chi2 = n for a 2-class perfectly dependent table.
        assert!((chi2_statistic(&values, &labels, 10).unwrap() - 200.0).abs() < 1e-9);
    }

    fn event(id: usize, kind: TurnKind, rows: &[Vec<f64>]) -> TurnEvent {
        let names = vec![String::from("noise"), String::from("signal")];
        TurnEvent::new(format!("e{id}"), kind, "s", 0.0, ObservationMatrix::from_rows(rows, 20.0, names).unwrap())
    }

    fn toy_corpus() -> Corpus {
        let mut events = Vec::new();
        for i in 0..40 {
            let kind = if i % 2 == 0 { TurnKind::Give } else { TurnKind::Keep };
            let level = if kind == TurnKind::Give { 5.0 } else { -5.0 };
            let rows: Vec<Vec<f64>> =
                (0..12).map(|t| vec![libm::sin((i * 13 + t) as f64), level + 0.1 * t as f64]).collect();
            events.push(event(i, kind, &rows));
        }
        Corpus::new(events, vec![]).unwrap()
    }

    #[test]
    fn rank_prefers_dependent_channel() {
        let spec = chi2_rank(&toy_corpus(), 12).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.selected[0], FeatureKey { channel: 1, filter: FilterId::Identity });
        let last = spec.selected.last().unwrap();
        assert_eq!(last.channel, 0);
    }

    #[test]
    fn rank_rejects_single_class_and_bad_m() {
        let mut c = toy_corpus();
        assert!(chi2_rank(&c, 13).is_err());
        assert!(chi2_rank(&c, 0).is_err());
        c.events.retain(|e| e.kind == TurnKind::Keep);
        assert!(matches!(chi2_rank(&c, 1), Err(Error::Degenerate(_))));
    }

    proptest! {
        #[test]
        fn affine_rescale_keeps_statistic(
            values in proptest::collection::vec(-1e3f64..1e3, 20..200),
            scale in 0.5f64..4.0,
            seed in 0u64..1000,
        ) {
            let labels: Vec<u8> = values.iter().enumerate().map(|(i, _)| (i as u64 * 31 + seed).is_multiple_of(3) as u8).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let a = chi2_statistic(&values, &labels, 10).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v * scale).collect();
            let b = chi2_statistic(&shifted, &labels, 10).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
