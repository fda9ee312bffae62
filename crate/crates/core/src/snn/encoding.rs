use alloc::format;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::N_EXCITATORY;
use crate::rng::{self, tags};
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_LEVELS: usize = 40;
pub const NEURONS_PER_LEVEL: usize = 5;
pub const MAX_STIMULUS_ROWS: usize = 40;
/// Injected DC current (mA) for one stimulated tick.
pub const STIMULUS_CURRENT: f64 = 20.0;

const MIN_QUANTIZER_VALUES: usize = 100;

/// Maps real values onto `levels` integer levels between the 1st and 99th
/// percentiles of the fitting data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub r1: f64,
    pub r99: f64,
    pub levels: usize,
}

impl Quantizer {
    pub fn fit(values: &[f64], levels: usize) -> Result<Self> {
        if values.len() < MIN_QUANTIZER_VALUES {
            return Err(Error::data(format!(
                "quantizer needs at least {MIN_QUANTIZER_VALUES} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantizer input".into()));
        }
        let sorted = stats::sorted(values);
        let r1 = stats::quantile_sorted(&sorted, 0.01);
        let r99 = stats::quantile_sorted(&sorted, 0.99);
        Quantizer::new(r1, r99, levels)
    }

    pub fn new(r1: f64, r99: f64, levels: usize) -> Result<Self> {
        if levels < 2 || levels > u8::MAX as usize + 1 {
            return Err(Error::param("levels", format!("must be in 2..=256, got {levels}")));
        }
        if !(r1 < r99) {
            return Err(Error::degenerate(format!("constant channel: r1 = {r1}, r99 = {r99}")));
        }
        Ok(Quantizer { r1, r99, levels })
    }

    pub fn quantize(&self, x: f64) -> u8 {
        quantize(x, self.r1, self.r99, self.levels) as u8
    }
}

/// Level of `x`: 0 at or below `r1`, `levels - 1` at or above `r99`,
/// linear bins in between.
pub fn quantize(x: f64, r1: f64, r99: f64, levels: usize) -> usize {
    if x <= r1 {
        return 0;
    }
    if x >= r99 {
        return levels - 1;
    }
    let q = libm::floor((x - r1) / (r99 - r1) * levels as f64);
    (q as usize).min(levels - 1)
}

/// Row-major `rows x cols` matrix of levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedEvent {
    rows: usize,
    cols: usize,
    levels: usize,
    data: Vec<u8>,
}

impl QuantizedEvent {
    pub fn new(rows: usize, cols: usize, levels: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::data(format!("expected {} levels, got {}", rows * cols, data.len())));
        }
        if let Some(bad) = data.iter().find(|&&q| q as usize >= levels) {
            return Err(Error::data(format!("level {bad} out of range for {levels} levels")));
        }
        Ok(QuantizedEvent { rows, cols, levels, data })
    }

    /// Quantizes column `j` of a row-major matrix with `quantizers[j]`.
    pub fn from_values(rows: usize, values: &[f64], quantizers: &[Quantizer]) -> Result<Self> {
        let cols = quantizers.len();
        if values.len() != rows * cols {
            return Err(Error::data(format!("expected {} values, got {}", rows * cols, values.len())));
        }
        let levels = quantizers.first().map_or(DEFAULT_LEVELS, |q| q.levels);
        if quantizers.iter().any(|q| q.levels != levels) {
            return Err(Error::param("levels", "quantizers disagree on level count"));
        }
        let data = values.iter().enumerate().map(|(i, &x)| quantizers[i % cols].quantize(x)).collect();
        Ok(QuantizedEvent { rows, cols, levels, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }
}

/// Assignment of `NEURONS_PER_LEVEL` distinct excitatory neurons to every
/// level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMap {
    pub seed: u64,
    pub groups: Vec<[u16; NEURONS_PER_LEVEL]>,
}

impl LevelMap {
    pub fn levels(&self) -> usize {
        self.groups.len()
    }

    pub fn neurons(&self, level: usize) -> &[u16; NEURONS_PER_LEVEL] {
        &self.groups[level]
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.len() * NEURONS_PER_LEVEL != N_EXCITATORY {
            return Err(Error::data(format!("level map has {} groups", self.groups.len())));
        }
        let mut seen = [false; N_EXCITATORY];
        for &n in self.groups.iter().flatten() {
            let n = n as usize;
            if n >= N_EXCITATORY || seen[n] {
                return Err(Error::data(format!("level map reuses or overflows neuron {n}")));
            }
            seen[n] = true;
        }
        Ok(())
    }
}

/// Random partition of the excitatory neurons into `levels` groups.
pub fn map_levels(levels: usize, seed: u64) -> Result<LevelMap> {
    if levels * NEURONS_PER_LEVEL != N_EXCITATORY {
        return Err(Error::param(
            "levels",
            format!("{levels} levels x {NEURONS_PER_LEVEL} neurons must equal {N_EXCITATORY}"),
        ));
    }
    let mut perm: Vec<u16> = (0..N_EXCITATORY as u16).collect();
    perm.shuffle(&mut rng::stream(seed, tags::LEVEL_MAP));
    let groups = perm
        .chunks_exact(NEURONS_PER_LEVEL)
        .map(|c| {
            let mut g = [0u16; NEURONS_PER_LEVEL];
            g.copy_from_slice(c);
            g
        })
        .collect();
    Ok(LevelMap { seed, groups })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub time_ms: u16,
    pub neuron: u16,
    pub current: f64,
}

/// Stimuli ordered by time, at most one per millisecond.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StimulusSchedule {
    pub stimuli: Vec<Stimulus>,
}

impl StimulusSchedule {
    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    /// Time of the last stimulus, 0 when empty.
    pub fn span_ms(&self) -> u16 {
        self.stimuli.last().map_or(0, |s| s.time_ms)
    }
}

/// Row `r` (0-based) stimulates the five neurons of its level one per
/// millisecond at `5r + 1 ..= 5r + 5`.
pub fn schedule_stimuli(column: &[u8], map: &LevelMap) -> Result<StimulusSchedule> {
    if column.len() > MAX_STIMULUS_ROWS {
        return Err(Error::data(format!(
            "{} rows exceed the {MAX_STIMULUS_ROWS}-row stimulation window",
            column.len()
        )));
    }
    let mut stimuli = Vec::with_capacity(column.len() * NEURONS_PER_LEVEL);
    for (r, &q) in column.iter().enumerate() {
        let group = map
            .groups
            .get(q as usize)
            .ok_or_else(|| Error::data(format!("level {q} not in level map")))?;
        for (k, &neuron) in group.iter().enumerate() {
            stimuli.push(Stimulus {
                time_ms: (NEURONS_PER_LEVEL * r + k + 1) as u16,
                neuron,
                current: STIMULUS_CURRENT,
            });
        }
    }
    Ok(StimulusSchedule { stimuli })
}
