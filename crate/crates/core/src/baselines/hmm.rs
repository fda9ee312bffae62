use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dataset::{slice_partial, Corpus, FeaturePipeline, ObservationMatrix};
use crate::hmm::{fit_gaussian, EmConfig, GaussianHmm};
use crate::objects::split_validation;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmmBaselineConfig {
    pub alpha: f64,
    pub num_features: usize,
    pub n_states: usize,
    pub em: EmConfig,
    pub validation_fraction: f64,
}

impl Default for HmmBaselineConfig {
    fn default() -> Self {
        HmmBaselineConfig {
            alpha: 0.2,
            num_features: 10,
            n_states: 5,
            em: EmConfig { max_iter: 100, tol: 1e-4, restarts: 5 },
            validation_fraction: 0.2,
        }
    }
}

impl HmmBaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        if self.num_features == 0 {
            return Err(Error::param("num_features", "must be positive"));
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

/// One Gaussian-emission HMM per class over the selected features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmBaseline {
    pub pipeline: FeaturePipeline,
    /// Index 0 models keep events, index 1 give events.
    pub models: [GaussianHmm; 2],
}

impl HmmBaseline {
    pub fn train(corpus: &Corpus, cfg: &HmmBaselineConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        corpus.require_both_classes()?;
        let pipeline = FeaturePipeline::fit(corpus, cfg.alpha, cfg.num_features)?;
        let fit = |class: u8| -> Result<GaussianHmm> {
            let seqs: Vec<ObservationMatrix> = corpus
                .events
                .iter()
                .filter(|e| e.label() == class)
                .map(|e| pipeline.transform(&e.observation))
                .collect::<Result<_>>()?;
            let class_seed = rng::derive(seed, class as u64);
            let (train, val) = split_validation(&seqs, cfg.validation_fraction, class_seed);
            Ok(fit_gaussian(&train, &val, cfg.n_states, &cfg.em, class_seed)?.0)
        };
        let keep = fit(0)?;
        let give = fit(1)?;
        Ok(HmmBaseline { pipeline, models: [keep, give] })
    }

    /// Log-likelihoods of the first `tau` of `x` under the keep and give
    /// models.
    pub fn log_likelihoods(&self, x: &ObservationMatrix, tau: f64) -> Result<[f64; 2]> {
        let features = self.pipeline.transform(&slice_partial(x, tau)?)?;
        Ok([self.models[0].log_likelihood(&features)?, self.models[1].log_likelihood(&features)?])
    }

    /// Give when the give model fits strictly better; the score is the
    /// log-likelihood ratio.
    pub fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        let [keep, give] = self.log_likelihoods(x, tau)?;
        let score = give - keep;
        if score.is_nan() {
            return Err(Error::NonFinite("both class models assign zero likelihood".into()));
        }
        Ok((u8::from(score > 0.0), score))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticConfig};

    fn small() -> (Corpus, HmmBaselineConfig) {
        let corpus =
            generate_synthetic(&SyntheticConfig { n_subjects: 3, events_per_subject: 40, ..Default::default() }, 2)
                .unwrap();
        let cfg = HmmBaselineConfig { num_features: 3, em: EmConfig { max_iter: 30, tol: 1e-4, restarts: 2 }, ..Default::default() };
        (corpus, cfg)
    }

    #[test]
    fn identical_models_tie_to_keep() {
        let (corpus, cfg) = small();
        let mut m = HmmBaseline::train(&corpus, &cfg, 1).unwrap();
        m.models[1] = m.models[0].clone();
        for e in &corpus.events {
            assert_eq!(m.predict(&e.observation, 1.0).unwrap(), (0, 0.0));
        }
    }

    #[test]
    fn deterministic_and_better_than_chance() {
        let (corpus, cfg) = small();
        let a = HmmBaseline::train(&corpus, &cfg, 4).unwrap();
        assert_eq!(a, HmmBaseline::train(&corpus, &cfg, 4).unwrap());
        let correct = corpus.events.iter().filter(|e| a.predict(&e.observation, 1.0).unwrap().0 == e.label()).count();
        assert!(correct as f64 > 0.6 * corpus.events.len() as f64, "{correct}");
    }

    #[test]
    fn single_class_rejected() {
        let (corpus, cfg) = small();
        let keep: Vec<_> = corpus.events.iter().filter(|e| e.label() == 0).cloned().collect();
        assert!(HmmBaseline::train(&corpus.with_events(keep), &cfg, 1).is_err());
    }
}
