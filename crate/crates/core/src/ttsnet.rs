//! The two-stage spiking model: per-feature STDP-trained networks, NHNF
//! descriptors and a linear classifier on top.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::classify::{fit_classifier, Classifier, ClassifierConfig, ClassifierModel, Standardizer};
use crate::dataset::{resample_event, resample_prefix, slice_partial, Corpus, FeaturePipeline, ObservationMatrix};
use crate::descriptors::{effective_duration, nhnf, FiringMap, DEFAULT_BINS};
use crate::exec::Executor;
use crate::metrics::Confusion;
use crate::rng;
use crate::snn::{
    build_network, map_levels, schedule_stimuli, simulate, train_weights, KernelPair, LevelMap, QuantizedEvent,
    Quantizer, SpikingNetwork, TrainConfig, TrainingTrace, DEFAULT_LEVELS, MAX_STIMULUS_ROWS,
};
use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtsnetConfig {
    /// EWMA weight of the newest sample.
    pub alpha: f64,
    /// Selected (channel, filter) features, one network each.
    pub num_features: usize,
    pub levels: usize,
    /// Rows every event is resampled to before stimulation.
    pub resample_len: usize,
    pub kernel_pair: KernelPair,
    pub bins: usize,
    pub sim_ms: usize,
    /// Normalize descriptors by the full simulation span instead of the
    /// span covered by the observed rows plus a settle window.
    pub fixed_normalization: bool,
    pub stdp: TrainConfig,
    pub classifier: ClassifierConfig,
}

impl Default for TtsnetConfig {
    fn default() -> Self {
        TtsnetConfig {
            alpha: 0.2,
            num_features: 10,
            levels: DEFAULT_LEVELS,
            resample_len: MAX_STIMULUS_ROWS,
            kernel_pair: KernelPair::RS_LTS,
            bins: DEFAULT_BINS,
            sim_ms: 250,
            fixed_normalization: false,
            stdp: TrainConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

impl TtsnetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        if self.levels * crate::snn::NEURONS_PER_LEVEL != crate::snn::N_EXCITATORY {
            return Err(Error::param("levels", "levels x 5 neurons must cover the 200 excitatory neurons"));
        }
        if self.bins == 0 || !crate::snn::N_TOTAL.is_multiple_of(self.bins) {
            return Err(Error::param("bins", "must divide the neuron count"));
        }
        if self.stdp.presentations == 0 {
            return Err(Error::param("presentations", "must be positive"));
        }
        if let ClassifierConfig::LinearSvm { c_grid, epochs } = &self.classifier {
            if c_grid.is_empty() || c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(Error::param("c_grid", "must be non-empty and positive"));
            }
            if *epochs == 0 {
                return Err(Error::param("epochs", "must be positive"));
            }
        }
        if self.num_features == 0 {
            return Err(Error::param("num_features", "must be positive"));
        }
        if !(2..=MAX_STIMULUS_ROWS).contains(&self.resample_len) {
            return Err(Error::param("resample_len", format!("must lie in 2..={MAX_STIMULUS_ROWS}")));
        }
        if self.sim_ms < 5 * self.resample_len {
            return Err(Error::param("sim_ms", "shorter than the stimulation span"));
        }
        self.kernel_pair.validate()?;
        self.stdp.stdp.validate()
    }
}

/// Artifacts of training that are not needed for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub traces: Vec<TrainingTrace>,
    /// F1 of the classifier on its own training descriptors.
    pub training_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsnetModel {
    pub version: u32,
    pub seed: u64,
    pub config: TtsnetConfig,
    pub pipeline: FeaturePipeline,
    pub quantizers: Vec<Quantizer>,
    pub level_maps: Vec<LevelMap>,
    pub networks: Vec<SpikingNetwork>,
    pub descriptor_stats: Standardizer,
    pub classifier: ClassifierModel,
}

fn quantize(x: &ObservationMatrix, quantizers: &[Quantizer]) -> Result<QuantizedEvent> {
    QuantizedEvent::from_values(x.rows(), x.data(), quantizers)
}

impl TtsnetModel {
    pub fn train<E: Executor>(corpus: &Corpus, cfg: &TtsnetConfig, seed: u64, exec: &E) -> Result<(Self, TrainReport)> {
        cfg.validate()?;
        if corpus.subjects.len() < 2 {
            return Err(Error::data("training needs at least two subjects"));
        }
        corpus.require_both_classes()?;
        let pipeline = FeaturePipeline::fit(corpus, cfg.alpha, cfg.num_features)?;
        let m = pipeline.num_features();
        let labels = corpus.labels();

        let resampled: Vec<ObservationMatrix> = exec
            .map_indexed(corpus.events.len(), |i| {
                resample_event(&pipeline.transform(&corpus.events[i].observation)?, cfg.resample_len)
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let quantizers: Vec<Quantizer> = (0..m)
            .map(|j| {
                let values: Vec<f64> = resampled.iter().flat_map(|x| x.column(j)).collect();
                Quantizer::fit(&values, cfg.levels)
            })
            .collect::<Result<_>>()?;
        let quantized: Vec<QuantizedEvent> =
            resampled.iter().map(|x| quantize(x, &quantizers)).collect::<Result<_>>()?;
        let level_maps: Vec<LevelMap> =
            (0..m).map(|j| map_levels(cfg.levels, rng::derive(seed, 2 * j as u64))).collect::<Result<_>>()?;

        // Stage 1: unsupervised STDP, one network per feature.
        let stage1: Vec<(SpikingNetwork, TrainingTrace)> = exec
            .map_indexed(m, |j| {
                let mut net = build_network(cfg.kernel_pair, rng::derive(seed, 2 * j as u64 + 1))?;
                let schedules = quantized
                    .iter()
                    .map(|q| schedule_stimuli(&q.column(j), &level_maps[j]))
                    .collect::<Result<Vec<_>>>()?;
                let trace = train_weights(&mut net, &schedules, &labels, &cfg.stdp, rng::derive(seed, 1000 + j as u64))?;
                log::debug!("feature {j}: STDP tail delta {:.3}", trace.tail_mean(100));
                Ok((net, trace))
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let (networks, traces): (Vec<_>, Vec<_>) = stage1.into_iter().unzip();

        let mut model = TtsnetModel {
            version: MODEL_VERSION,
            seed,
            config: cfg.clone(),
            pipeline,
            quantizers,
            level_maps,
            networks,
            descriptor_stats: Standardizer { mean: Vec::new(), std: Vec::new() },
            classifier: ClassifierModel::NearestCentroid(crate::classify::NearestCentroid {
                centroids: [Vec::new(), Vec::new()],
            }),
        };

        // Stage 2: frozen networks turn every event into a descriptor.
        let raw: Vec<Vec<f64>> = exec
            .map_indexed(quantized.len(), |i| model.descriptor_from_quantized(&quantized[i]))
            .into_iter()
            .collect::<Result<_>>()?;
        model.descriptor_stats = Standardizer::fit(&raw)?;
        let features = model.descriptor_stats.apply_all(&raw);
        model.classifier = fit_classifier(&features, &labels, &cfg.classifier, rng::derive(seed, 77))?;
        let preds: Vec<u8> = features.iter().map(|f| model.classifier.decide(f)).collect();
        let training_f1 = Confusion::from_predictions(&labels, &preds)?.f1();
        Ok((model, TrainReport { traces, training_f1 }))
    }

    pub fn num_features(&self) -> usize {
        self.networks.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.networks.len();
        if self.version != MODEL_VERSION {
            return Err(Error::data(format!("unsupported model version {}", self.version)));
        }
        if m == 0 || self.quantizers.len() != m || self.level_maps.len() != m || self.pipeline.num_features() != m {
            return Err(Error::data("model parts disagree on the feature count"));
        }
        for map in &self.level_maps {
            map.validate()?;
        }
        let width = m * self.config.bins;
        if self.descriptor_stats.mean.len() != width || self.classifier.dim() != width {
            return Err(Error::data("classifier width does not match the descriptor"));
        }
        Ok(())
    }

    /// Selected features of the first `tau` of `x`, on the resampling grid of
    /// the full event (only the grid points already observed).
    pub fn encode(&self, x: &ObservationMatrix, tau: f64) -> Result<QuantizedEvent> {
        let prefix = slice_partial(x, tau)?;
        let features = self.pipeline.transform(&prefix)?;
        let grid = resample_prefix(&features, x.rows(), self.config.resample_len)?;
        quantize(&grid, &self.quantizers)
    }

    fn span_ms(&self, rows: usize) -> usize {
        effective_duration(rows, self.config.sim_ms, self.config.fixed_normalization)
    }

    /// One firing map per feature network, covering the normalization span.
    pub fn firing_maps_quantized(&self, q: &QuantizedEvent) -> Result<Vec<FiringMap>> {
        let span = self.span_ms(q.rows());
        (0..self.num_features())
            .map(|j| simulate(&self.networks[j], &schedule_stimuli(&q.column(j), &self.level_maps[j])?, span))
            .collect()
    }

    pub fn firing_maps(&self, x: &ObservationMatrix, tau: f64) -> Result<Vec<FiringMap>> {
        self.firing_maps_quantized(&self.encode(x, tau)?)
    }

    fn descriptor_from_quantized(&self, q: &QuantizedEvent) -> Result<Vec<f64>> {
        let maps = self.firing_maps_quantized(q)?;
        Ok(nhnf(&maps, self.config.bins, self.span_ms(q.rows()) as f64)?.values)
    }

    /// Unnormalized NHNF values of the first `tau` of `x`, `m x bins`
    /// row-major.
    pub fn descriptor(&self, x: &ObservationMatrix, tau: f64) -> Result<Vec<f64>> {
        self.descriptor_from_quantized(&self.encode(x, tau)?)
    }

    /// Label (1 = give) and classifier score from the first `tau` of `x`.
    pub fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        let h = self.descriptor_stats.apply(&self.descriptor(x, tau)?);
        let score = self.classifier.score(&h);
        Ok((u8::from(score >= 0.0), score))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticConfig, TurnKind};
    use crate::exec::Sequential;

    fn quick_config() -> TtsnetConfig {
        TtsnetConfig {
            num_features: 3,
            stdp: TrainConfig { presentations: 30, ..TrainConfig::default() },
            classifier: ClassifierConfig::LinearSvm { c_grid: alloc::vec![1.0], epochs: 20 },
            ..TtsnetConfig::default()
        }
    }

    fn corpus() -> Corpus {
        generate_synthetic(&SyntheticConfig { n_subjects: 2, events_per_subject: 30, ..Default::default() }, 3)
            .unwrap()
    }

    #[test]
    fn trains_and_predicts_deterministically() {
        let c = corpus();
        let (a, report) = TtsnetModel::train(&c, &quick_config(), 5, &Sequential).unwrap();
        let (b, _) = TtsnetModel::train(&c, &quick_config(), 5, &Sequential).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(report.traces.len(), 3);
        assert_eq!(a.descriptor_stats.mean.len(), 3 * 25);
        let x = &c.events[0].observation;
        assert_eq!(a.predict(x, 1.0).unwrap(), b.predict(x, 1.0).unwrap());
        let zeros = ObservationMatrix::new(x.rows(), x.cols(), alloc::vec![0.0; x.rows() * x.cols()], 20.0, x.channel_names().to_vec()).unwrap();
        assert_eq!(a.predict(&zeros, 1.0).unwrap(), a.predict(&zeros, 1.0).unwrap());
        for tau in [0.1, 0.5] {
            let (label, score) = a.predict(x, tau).unwrap();
            assert_eq!(label, u8::from(score >= 0.0));
        }
        assert!(a.predict(x, 0.0).is_err());
    }

    #[test]
    fn full_tau_matches_unsliced_encoding() {
        let c = corpus();
        let (m, _) = TtsnetModel::train(&c, &quick_config(), 1, &Sequential).unwrap();
        let x = &c.events[3].observation;
        let direct = quantize(&resample_event(&m.pipeline.transform(x).unwrap(), 40).unwrap(), &m.quantizers).unwrap();
        assert_eq!(m.encode(x, 1.0).unwrap(), direct);
        let partial = m.encode(x, 0.3).unwrap();
        assert!(partial.rows() < 40);
        assert_eq!(m.firing_maps(x, 0.3).unwrap()[0].duration() as usize, 5 * partial.rows() + 50);
    }

    #[test]
    fn single_class_rejected() {
        let c = corpus();
        let keep: Vec<_> = c.events.iter().filter(|e| e.kind == TurnKind::Keep).cloned().collect();
        assert!(matches!(
            TtsnetModel::train(&c.with_events(keep), &quick_config(), 1, &Sequential),
            Err(Error::Degenerate(_))
        ));
    }
}
