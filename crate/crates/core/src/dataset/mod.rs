//! Turn events, corpora and the signal-preprocessing chain.

mod chi2;
mod filters;
mod pipeline;
mod preprocess;
mod synthetic;

pub use chi2::{chi2_rank, chi2_statistic, FeatureKey, FeatureSpec, CHI2_BINS};
pub use filters::{filter_bank_encode, filter_kernel, FilterId, FILTER_SAMPLE_HZ};
pub use pipeline::FeaturePipeline;
pub use preprocess::{
    ewma_smooth, partial_rows, resample_event, resample_prefix, slice_partial, znormalize, ChannelStats,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, OBJECT_NAMES, PROCEDURE_TRANSITIONS};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Agent {
    Human,
    Robot,
}

/// One step of a collaborative task: who acts, what they do, which object
/// they probably use, and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub agent: Agent,
    pub action_label: String,
    pub object_probs: Vec<f64>,
    pub begin_time: f64,
    pub finish_time: f64,
}

impl Subtask {
    pub fn validate(&self) -> Result<()> {
        if self.object_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::data("object probabilities must lie in [0, 1]"));
        }
        let total: f64 = self.object_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::data(format!("object probabilities sum to {total}, expected 1")));
        }
        if self.finish_time < self.begin_time {
            return Err(Error::data("subtask finishes before it begins"));
        }
        Ok(())
    }

    /// Most likely object id (1-based), ties to the smallest id.
    pub fn likely_object(&self) -> Option<u8> {
        crate::stats::argmax(&self.object_probs).map(|i| (i + 1) as u8)
    }
}

/// Turn-giving events carry label 1, turn-keeping events label 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TurnKind {
    Keep,
    Give,
}

impl TurnKind {
    pub fn label(self) -> u8 {
        match self {
            TurnKind::Keep => 0,
            TurnKind::Give => 1,
        }
    }

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            0 => Ok(TurnKind::Keep),
            1 => Ok(TurnKind::Give),
            other => Err(Error::data(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

/// Row-major `rows x cols` signal window sampled at `sample_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    sample_hz: f64,
    channel_names: Vec<String>,
}

impl ObservationMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, sample_hz: f64, channel_names: Vec<String>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::data("observation matrix needs at least one row and one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::data(format!("expected {} values for {rows}x{cols}, got {}", rows * cols, data.len())));
        }
        if channel_names.len() != cols {
            return Err(Error::data(format!("{} channel names for {cols} columns", channel_names.len())));
        }
        if !(sample_hz.is_finite() && sample_hz > 0.0) {
            return Err(Error::param("sample_hz", "must be positive"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry at row {}, column {}", i / cols, i % cols)));
        }
        Ok(ObservationMatrix { rows, cols, data, sample_hz, channel_names })
    }

    /// Builds from per-row vectors.
    pub fn from_rows(rows: &[Vec<f64>], sample_hz: f64, channel_names: Vec<String>) -> Result<Self> {
        let cols = channel_names.len();
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::data(format!("row {r} has {} values, expected {cols}", rows[r].len())));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data, sample_hz, channel_names)
    }

    /// Builds from per-column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>], sample_hz: f64, channel_names: Vec<String>) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::data("columns differ in length"));
        }
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            data.extend(columns.iter().map(|c| c[r]));
        }
        Self::new(rows, cols, data, sample_hz, channel_names)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn sample_hz(&self) -> f64 {
        self.sample_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.rows as f64 / self.sample_hz
    }

    /// Applies `f` to every column, keeping shape and names.
    pub fn map_columns(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let cols: Vec<Vec<f64>> = (0..self.cols).map(|c| f(c, &self.column(c))).collect();
        Self::from_columns(&cols, self.sample_hz, self.channel_names.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEvent {
    pub event_id: String,
    pub kind: TurnKind,
    pub start_time: f64,
    pub end_time: f64,
    pub subject_id: String,
    pub observation: ObservationMatrix,
}

impl TurnEvent {
    /// Event starting at `start_time` and lasting as long as its observation.
    pub fn new(event_id: impl Into<String>, kind: TurnKind, subject_id: impl Into<String>, start_time: f64, observation: ObservationMatrix) -> Self {
        let end_time = start_time + observation.duration();
        TurnEvent { event_id: event_id.into(), kind, start_time, end_time, subject_id: subject_id.into(), observation }
    }

    pub fn label(&self) -> u8 {
        self.kind.label()
    }

    pub fn with_observation(&self, observation: ObservationMatrix) -> Self {
        TurnEvent { observation, ..self.clone() }
    }
}

/// Ordered object requests of one trial. Ids are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSequence {
    pub trial_id: String,
    pub subject_id: String,
    pub objects: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub events: Vec<TurnEvent>,
    pub subjects: Vec<String>,
    pub object_sequences: Vec<ObjectSequence>,
}

impl Corpus {
    /// Validates the events and collects subjects in order of first
    /// appearance (events first, then object sequences).
    pub fn new(events: Vec<TurnEvent>, object_sequences: Vec<ObjectSequence>) -> Result<Self> {
        let mut subjects: Vec<String> = Vec::new();
        let mut seen = BTreeSet::new();
        let ids = events.iter().map(|e| &e.subject_id).chain(object_sequences.iter().map(|s| &s.subject_id));
        for id in ids {
            if seen.insert(id.clone()) {
                subjects.push(id.clone());
            }
        }
        let corpus = Corpus { events, subjects, object_sequences };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let subjects: BTreeSet<&String> = self.subjects.iter().collect();
        let first = self.events.first();
        for e in &self.events {
            if !subjects.contains(&e.subject_id) {
                return Err(Error::data(format!("event {} has unknown subject {}", e.event_id, e.subject_id)));
            }
            if !(e.end_time > e.start_time) {
                return Err(Error::data(format!("event {} ends before it starts", e.event_id)));
            }
            if let Some(f) = first {
                if e.observation.channel_names() != f.observation.channel_names() {
                    return Err(Error::data(format!(
                        "event {} has channels inconsistent with event {}",
                        e.event_id, f.event_id
                    )));
                }
            }
        }
        for s in &self.object_sequences {
            if s.objects.contains(&0) {
                return Err(Error::data(format!("trial {} contains object id 0", s.trial_id)));
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.events.first().map_or(0, |e| e.observation.cols())
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.events.first().map(|e| e.observation.channel_names().to_vec()).unwrap_or_default()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.events.iter().map(TurnEvent::label).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let give = self.events.iter().filter(|e| e.kind == TurnKind::Give).count();
        [self.events.len() - give, give]
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        let [keep, give] = self.class_counts();
        if keep == 0 || give == 0 {
            return Err(Error::degenerate(format!("need both classes, have {keep} keep / {give} give events")));
        }
        Ok(())
    }

    /// Same subjects and object sequences with a different event list.
    pub fn with_events(&self, events: Vec<TurnEvent>) -> Corpus {
        Corpus { events, subjects: self.subjects.clone(), object_sequences: self.object_sequences.clone() }
    }

    /// Keeps only the given subjects (events and object sequences).
    pub fn restrict_to(&self, keep: &dyn Fn(&str) -> bool) -> Corpus {
        Corpus {
            events: self.events.iter().filter(|e| keep(&e.subject_id)).cloned().collect(),
            subjects: self.subjects.iter().filter(|s| keep(s)).cloned().collect(),
            object_sequences: self.object_sequences.iter().filter(|s| keep(&s.subject_id)).cloned().collect(),
        }
    }
}
