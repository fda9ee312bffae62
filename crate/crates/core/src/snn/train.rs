use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoding::StimulusSchedule;
use super::network::SpikingNetwork;
use super::sim::{Plasticity, Simulator, DEFAULT_SIM_MS};
use super::stdp::StdpConfig;
use crate::rng::{self, tags};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of stimulus presentations; 3600 x 250 ms = 900 s.
    pub presentations: usize,
    pub sim_ms: usize,
    pub stdp: StdpConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { presentations: 3600, sim_ms: DEFAULT_SIM_MS, stdp: StdpConfig::default() }
    }
}

/// Per-presentation 2-norm of the excitatory weight change.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub sim_ms: usize,
    pub delta_norms: Vec<f64>,
    pub firings: Vec<usize>,
}

impl TrainingTrace {
    pub fn simulated_ms(&self) -> usize {
        self.sim_ms * self.delta_norms.len()
    }

    /// Mean of the last `k` weight-change norms.
    pub fn tail_mean(&self, k: usize) -> f64 {
        let k = k.min(self.delta_norms.len());
        if k == 0 {
            return 0.0;
        }
        self.delta_norms[self.delta_norms.len() - k..].iter().sum::<f64>() / k as f64
    }
}

/// Unsupervised STDP phase: presents randomly drawn training schedules (with
/// replacement) and lets the excitatory weights adapt.
///
/// `labels` only guards that both classes are represented.
pub fn train_weights(
    net: &mut SpikingNetwork,
    schedules: &[StimulusSchedule],
    labels: &[u8],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainingTrace> {
    cfg.stdp.validate()?;
    if schedules.len() != labels.len() {
        return Err(Error::data(format!("{} schedules but {} labels", schedules.len(), labels.len())));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::degenerate("STDP training needs events of both classes"));
    }
    let mut rng = rng::stream(seed, tags::TRAIN_ORDER);
    let mut sim = Simulator::new(net);
    let mut plastic = Plasticity::new(net, cfg.stdp);
    let mut trace = TrainingTrace { sim_ms: cfg.sim_ms, ..Default::default() };
    let mut before = plastic.weights.clone();
    for _ in 0..cfg.presentations {
        let pick = rng.random_range(0..schedules.len());
        let map = sim.run(net, &schedules[pick], cfg.sim_ms, Some(&mut plastic))?;
        let sq: f64 = before.iter().zip(&plastic.weights).map(|(a, b)| (b - a) * (b - a)).sum();
        trace.delta_norms.push(libm::sqrt(sq));
        trace.firings.push(map.len());
        before.copy_from_slice(&plastic.weights);
    }
    net.set_weights(&plastic.weights);
    Ok(trace)
}
