use alloc::format;
use alloc::vec::Vec;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Corpus, ObservationMatrix};
use crate::descriptors::{extract_png, IndexedPng, PngGroup};
use crate::rng::{self, tags};
use crate::ttsnet::TtsnetModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PngConfig {
    /// Templates drawn per class.
    pub templates_per_class: usize,
    pub j_eps: f64,
}

impl Default for PngConfig {
    fn default() -> Self {
        PngConfig { templates_per_class: 20, j_eps: 0.9 }
    }
}

impl PngConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.j_eps > 0.0 && self.j_eps <= 1.0) {
            return Err(Error::param("j_eps", "must be in (0, 1]"));
        }
        if self.templates_per_class == 0 {
            return Err(Error::param("templates_per_class", "must be positive"));
        }
        Ok(())
    }
}

/// Co-firing sequences of randomly chosen training events, one per feature
/// network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PngBank {
    pub j_eps: f64,
    /// `templates[class][k][feature]`.
    pub templates: [Vec<Vec<PngGroup>>; 2],
    pub template_ids: [Vec<alloc::string::String>; 2],
}

fn groups(model: &TtsnetModel, x: &ObservationMatrix, tau: f64) -> Result<Vec<PngGroup>> {
    model.firing_maps(x, tau)?.iter().map(extract_png).collect()
}

impl PngBank {
    /// Samples the templates and simulates them through `model`'s networks.
    pub fn train(model: &TtsnetModel, corpus: &Corpus, cfg: &PngConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::stream(seed, tags::PNG_BANK);
        let mut templates: [Vec<Vec<PngGroup>>; 2] = [Vec::new(), Vec::new()];
        let mut template_ids: [Vec<alloc::string::String>; 2] = [Vec::new(), Vec::new()];
        for class in 0..2u8 {
            let members: Vec<usize> = (0..corpus.events.len()).filter(|&i| corpus.events[i].label() == class).collect();
            if members.len() < cfg.templates_per_class {
                return Err(Error::degenerate(format!(
                    "class {class} has {} events, {} templates requested",
                    members.len(),
                    cfg.templates_per_class
                )));
            }
            let mut picked: Vec<usize> =
                index::sample(&mut rng, members.len(), cfg.templates_per_class).into_iter().map(|i| members[i]).collect();
            picked.sort_unstable();
            for i in picked {
                let e = &corpus.events[i];
                templates[class as usize].push(groups(model, &e.observation, 1.0)?);
                template_ids[class as usize].push(e.event_id.clone());
            }
        }
        Ok(PngBank { j_eps: cfg.j_eps, templates, template_ids })
    }

    pub fn matcher(&self) -> PngMatcher {
        let index = |class: &Vec<Vec<PngGroup>>| -> Vec<Vec<IndexedPng>> {
            class.iter().map(|t| t.iter().cloned().map(IndexedPng::new).collect()).collect()
        };
        PngMatcher { j_eps: self.j_eps, templates: [index(&self.templates[0]), index(&self.templates[1])] }
    }
}

/// A bank prepared for fast repeated matching.
#[derive(Debug, Clone)]
pub struct PngMatcher {
    j_eps: f64,
    templates: [Vec<Vec<IndexedPng>>; 2],
}

impl PngMatcher {
    /// Mean similarity of `query` (one group per feature) to the templates
    /// of each class. Empty groups have similarity 0.
    pub fn mean_similarity(&self, query: &[PngGroup]) -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        for (class, bank) in self.templates.iter().enumerate() {
            let mut total = 0.0;
            for template in bank {
                if template.len() != query.len() {
                    return Err(Error::data(format!("{} groups, templates have {}", query.len(), template.len())));
                }
                total += template.iter().zip(query).map(|(t, q)| t.similarity(q, self.j_eps)).sum::<f64>();
            }
            out[class] = total / (bank.len() * query.len()) as f64;
        }
        Ok(out)
    }

    /// Give when the give templates are strictly more similar on average.
    pub fn predict(&self, model: &TtsnetModel, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        let [keep, give] = self.mean_similarity(&groups(model, x, tau)?)?;
        let score = give - keep;
        Ok((u8::from(score > 0.0), score))
    }
}
