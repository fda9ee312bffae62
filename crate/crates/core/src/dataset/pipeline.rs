use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::chi2::{chi2_rank, FeatureSpec};
use super::filters::apply_filter;
use super::preprocess::{ewma_smooth, ChannelStats};
use super::{Corpus, ObservationMatrix};
use crate::{Error, Result};

/// Fitted preprocessing: EWMA smoothing, z-normalization with stored
/// statistics, then the selected (channel, filter) encodings.
///
/// Every channel is normalized before selection; unselected channels are
/// simply never encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub alpha: f64,
    pub channel_names: Vec<String>,
    pub stats: ChannelStats,
    pub spec: FeatureSpec,
}

impl FeaturePipeline {
    pub fn fit(corpus: &Corpus, alpha: f64, num_features: usize) -> Result<Self> {
        corpus.require_both_classes()?;
        let smoothed = corpus
            .events
            .iter()
            .map(|e| Ok(e.with_observation(smooth(&e.observation, alpha)?)))
            .collect::<Result<Vec<_>>>()?;
        let smoothed = corpus.with_events(smoothed);
        let stats = ChannelStats::fit(smoothed.events.iter().map(|e| &e.observation), corpus.n_channels())?;
        let normalized = smoothed
            .events
            .iter()
            .map(|e| Ok(e.with_observation(stats.apply(&e.observation)?)))
            .collect::<Result<Vec<_>>>()?;
        let spec = chi2_rank(&smoothed.with_events(normalized), num_features)?;
        Ok(FeaturePipeline { alpha, channel_names: corpus.channel_names(), stats, spec })
    }

    pub fn num_features(&self) -> usize {
        self.spec.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.spec.selected.iter().map(|k| k.label(&self.channel_names)).collect()
    }

    /// Raw event window to its `rows x m` selected-feature matrix.
    pub fn transform(&self, x: &ObservationMatrix) -> Result<ObservationMatrix> {
        if x.channel_names() != self.channel_names.as_slice() {
            return Err(Error::data(format!(
                "channel mismatch: model expects {} channels {:?}, got {:?}",
                self.channel_names.len(),
                self.channel_names,
                x.channel_names()
            )));
        }
        let normalized = self.stats.apply(&smooth(x, self.alpha)?)?;
        let columns: Vec<Vec<f64>> =
            self.spec.selected.iter().map(|k| apply_filter(&normalized.column(k.channel), k.filter)).collect();
        ObservationMatrix::from_columns(&columns, x.sample_hz(), self.feature_names())
    }
}

fn smooth(x: &ObservationMatrix, alpha: f64) -> Result<ObservationMatrix> {
    let columns = x.columns().iter().map(|c| ewma_smooth(c, alpha)).collect::<Result<Vec<_>>>()?;
    ObservationMatrix::from_columns(&columns, x.sample_hz(), x.channel_names().to_vec())
}
