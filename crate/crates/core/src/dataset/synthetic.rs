//! Seeded synthetic corpus with the same shape as a multi-subject
//! turn-taking recording: per-subject AR(1) background on every channel,
//! a give-turn motif near the end of give events, and object request
//! sequences from a fixed surgical-procedure Markov chain.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, ObjectSequence, ObservationMatrix, TurnEvent, TurnKind};
use crate::rng::{self, tags};
use crate::{Error, Result};

/// Object vocabulary, ids `1..=6` in this order.
pub const OBJECT_NAMES: [&str; 6] = ["scalpel", "forceps", "retractor", "scissors", "hemostat", "needle"];

/// Row `i` gives the probabilities of the request following object `i + 1`.
pub const PROCEDURE_TRANSITIONS: [[f64; 6]; 6] = [
    [0.00, 0.75, 0.15, 0.00, 0.10, 0.00],
    [0.00, 0.00, 0.15, 0.15, 0.10, 0.60],
    [0.10, 0.60, 0.00, 0.20, 0.10, 0.00],
    [0.00, 0.20, 0.00, 0.00, 0.70, 0.10],
    [0.15, 0.15, 0.10, 0.50, 0.00, 0.10],
    [0.00, 0.15, 0.05, 0.60, 0.20, 0.00],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_subjects: usize,
    pub events_per_subject: usize,
    pub n_channels: usize,
    /// Fraction of give events per subject (rounded to whole events).
    pub give_prior: f64,
    /// Peak motif amplitude in units of the AR(1) innovation std.
    pub motif_amplitude: f64,
    /// Channels that carry the motif.
    pub motif_channels: Vec<usize>,
    /// Trailing fraction of a give window that holds the motif.
    pub motif_fraction: f64,
    /// Oscillation frequency of the motif burst (Hz).
    pub motif_burst_hz: f64,
    pub ar_coeff: f64,
    pub noise_std: f64,
    pub subject_offset_std: f64,
    pub sample_hz: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub trials_per_subject: usize,
    pub requests_per_trial: usize,
    /// Probability that a recorded request is replaced by a uniformly
    /// random object.
    pub object_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_subjects: 12,
            events_per_subject: 180,
            n_channels: 8,
            give_prior: 0.4,
            motif_amplitude: 3.0,
            motif_channels: vec![0, 1, 2],
            motif_fraction: 0.4,
            motif_burst_hz: 3.0,
            ar_coeff: 0.8,
            noise_std: 1.0,
            subject_offset_std: 0.5,
            sample_hz: 20.0,
            min_len: 20,
            max_len: 40,
            trials_per_subject: 5,
            requests_per_trial: 14,
            object_noise: 0.1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = Error::param;
        if self.n_subjects < 2 {
            return Err(bad("n_subjects", "need at least 2 subjects"));
        }
        if self.events_per_subject < 10 {
            return Err(bad("events_per_subject", "need at least 10 events per subject"));
        }
        if self.n_channels < 4 {
            return Err(bad("n_channels", "need at least 4 channels"));
        }
        if !(self.give_prior > 0.0 && self.give_prior < 1.0) {
            return Err(bad("give_prior", "must lie in (0, 1)"));
        }
        if !(self.motif_amplitude >= 0.0 && self.motif_amplitude.is_finite()) {
            return Err(bad("motif_amplitude", "must be finite and non-negative"));
        }
        if let Some(c) = self.motif_channels.iter().find(|&&c| c >= self.n_channels) {
            return Err(Error::param("motif_channels", format!("channel {c} out of range")));
        }
        if !(self.motif_fraction > 0.0 && self.motif_fraction <= 1.0) {
            return Err(bad("motif_fraction", "must lie in (0, 1]"));
        }
        if !(self.ar_coeff.abs() < 1.0) {
            return Err(bad("ar_coeff", "must lie in (-1, 1)"));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(bad("noise_std", "must be positive"));
        }
        if !(self.subject_offset_std >= 0.0) {
            return Err(bad("subject_offset_std", "must be non-negative"));
        }
        if !(self.sample_hz > 0.0) {
            return Err(bad("sample_hz", "must be positive"));
        }
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(bad("min_len", "need 2 <= min_len <= max_len"));
        }
        if self.requests_per_trial < 1 {
            return Err(bad("requests_per_trial", "need at least one request"));
        }
        if !(0.0..=1.0).contains(&self.object_noise) {
            return Err(bad("object_noise", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn channel_names(&self) -> Vec<String> {
        (0..self.n_channels).map(|c| format!("ch{c:02}")).collect()
    }

    pub fn subject_name(i: usize) -> String {
        format!("s{:02}", i + 1)
    }
}

/// Deterministic corpus for `(config, seed)`.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let mut rng = rng::stream(seed, tags::SYNTH_EVENTS);
    let names = config.channel_names();
    let innovation = config.noise_std;
    let stationary = innovation / libm::sqrt(1.0 - config.ar_coeff * config.ar_coeff);
    let n_give = libm::round(config.give_prior * config.events_per_subject as f64) as usize;

    let mut events = Vec::with_capacity(config.n_subjects * config.events_per_subject);
    for s in 0..config.n_subjects {
        let subject = SyntheticConfig::subject_name(s);
        let offsets: Vec<f64> =
            (0..config.n_channels).map(|_| config.subject_offset_std * rng::normal(&mut rng)).collect();
        let mut kinds: Vec<TurnKind> = (0..config.events_per_subject)
            .map(|i| if i < n_give { TurnKind::Give } else { TurnKind::Keep })
            .collect();
        kinds.shuffle(&mut rng);
        let mut clock = 0.0;
        for (k, kind) in kinds.into_iter().enumerate() {
            let len = rng.random_range(config.min_len..=config.max_len);
            let mut columns = vec![Vec::with_capacity(len); config.n_channels];
            for (c, column) in columns.iter_mut().enumerate() {
                let mut x = stationary * rng::normal(&mut rng);
                for _ in 0..len {
                    column.push(offsets[c] + x);
                    x = config.ar_coeff * x + innovation * rng::normal(&mut rng);
                }
            }
            if kind == TurnKind::Give {
                add_motif(config, &mut columns);
            }
            let x = ObservationMatrix::from_columns(&columns, config.sample_hz, names.clone())?;
            let id = format!("{subject}-e{k:03}");
            let event = TurnEvent::new(id, kind, subject.clone(), clock, x);
            clock = event.end_time + 1.0 + rng.random::<f64>();
            events.push(event);
        }
    }

    let sequences = generate_object_sequences(config, seed);
    Corpus::new(events, sequences)
}

fn add_motif(config: &SyntheticConfig, columns: &mut [Vec<f64>]) {
    let len = columns[0].len();
    let start = libm::floor((1.0 - config.motif_fraction) * len as f64) as usize;
    let span = len - start;
    let amp = config.motif_amplitude * config.noise_std;
    for (order, &c) in config.motif_channels.iter().enumerate() {
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..span {
            let ramp = (i + 1) as f64 / span as f64;
            let burst = 0.5 * libm::sin(2.0 * PI * config.motif_burst_hz * i as f64 / config.sample_hz);
            columns[c][start + i] += sign * amp * (ramp + burst);
        }
    }
}

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn generate_object_sequences(config: &SyntheticConfig, seed: u64) -> Vec<ObjectSequence> {
    let mut rng = rng::stream(seed, tags::SYNTH_OBJECTS);
    let mut out = Vec::with_capacity(config.n_subjects * config.trials_per_subject);
    for s in 0..config.n_subjects {
        let subject = SyntheticConfig::subject_name(s);
        for t in 0..config.trials_per_subject {
            let mut state = 0usize;
            let mut objects = Vec::with_capacity(config.requests_per_trial);
            for step in 0..config.requests_per_trial {
                if step > 0 {
                    state = sample_categorical(&mut rng, &PROCEDURE_TRANSITIONS[state]);
                }
                let observed =
                    if rng.random::<f64>() < config.object_noise { rng.random_range(0..6) } else { state };
                objects.push(observed as u8 + 1);
            }
            out.push(ObjectSequence { trial_id: format!("{subject}:t{}", t + 1), subject_id: subject.clone(), objects });
        }
    }
    out
}
