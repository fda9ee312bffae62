//! On-disk formats: the JSON Lines corpus, the object-sequence CSV, JSON
//! model bundles and the CSV reports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ttsnet_core::dataset::{Corpus, ObjectSequence, ObservationMatrix, TurnEvent, TurnKind};
use ttsnet_core::descriptors::{FiringMap, NhnfDescriptor};
use ttsnet_core::eval::{CurveSummary, ObjectPrediction, PredictionRecord};

use crate::{CliError, CliResult};

/// One line of the corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventLine {
    pub event_id: String,
    pub subject: String,
    pub label: u8,
    pub sample_hz: f64,
    pub channels: Vec<String>,
    /// Samples in rows, one value per channel. `null` marks a missing value
    /// and is rejected.
    pub data: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_time: Option<f64>,
}

impl EventLine {
    pub fn from_event(e: &TurnEvent) -> Self {
        let x = &e.observation;
        EventLine {
            event_id: e.event_id.clone(),
            subject: e.subject_id.clone(),
            label: e.label(),
            sample_hz: x.sample_hz(),
            channels: x.channel_names().to_vec(),
            data: (0..x.rows()).map(|r| x.row(r).iter().map(|&v| Some(v)).collect()).collect(),
            start_time: (e.start_time != 0.0).then_some(e.start_time),
        }
    }

    pub fn into_event(self) -> CliResult<TurnEvent> {
        let id = self.event_id;
        let bad = |msg: String| CliError::Data(format!("event {id}: {msg}"));
        let mut rows = Vec::with_capacity(self.data.len());
        for (r, row) in self.data.iter().enumerate() {
            let mut values = Vec::with_capacity(row.len());
            for (c, v) in row.iter().enumerate() {
                match v {
                    Some(v) if v.is_finite() => values.push(*v),
                    _ => return Err(bad(format!("non-finite value at row {r}, channel {c}"))),
                }
            }
            rows.push(values);
        }
        let kind = TurnKind::from_label(self.label).map_err(|e| bad(e.to_string()))?;
        let x = ObservationMatrix::from_rows(&rows, self.sample_hz, self.channels).map_err(|e| bad(e.to_string()))?;
        Ok(TurnEvent::new(id.clone(), kind, self.subject, self.start_time.unwrap_or(0.0), x))
    }
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Best-effort event id of a line that failed to parse.
fn sniff_event_id(line: &str) -> Option<&str> {
    let rest = &line[line.find("\"event_id\"")? + 10..];
    let rest = &rest[rest.find('"')? + 1..];
    Some(&rest[..rest.find('"')?])
}

/// Reads turn events from a JSON Lines file. Blank lines are skipped.
pub fn read_events(path: &Path) -> CliResult<Vec<TurnEvent>> {
    let mut events = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EventLine = serde_json::from_str(&line).map_err(|e| {
            let who = sniff_event_id(&line).map(|id| format!(" (event {id})")).unwrap_or_default();
            CliError::Data(format!("{}: line {}{who}: {e}", path.display(), i + 1))
        })?;
        events.push(parsed.into_event()?);
    }
    if events.is_empty() {
        return Err(CliError::Data(format!("{}: no events", path.display())));
    }
    Ok(events)
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectRow {
    trial_id: String,
    step: usize,
    object_id: u8,
}

/// Subject of a trial id of the form `subject:trial`; ids without a colon
/// are their own subject.
pub fn trial_subject(trial_id: &str) -> &str {
    trial_id.split_once(':').map_or(trial_id, |(s, _)| s)
}

/// Reads `trial_id,step,object_id` rows, grouped by trial in order of first
/// appearance and sorted by step within a trial.
pub fn read_object_sequences(path: &Path) -> CliResult<Vec<ObjectSequence>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut order: Vec<String> = Vec::new();
    let mut trials: BTreeMap<String, Vec<(usize, u8)>> = BTreeMap::new();
    for (i, row) in reader.deserialize::<ObjectRow>().enumerate() {
        let row = row.map_err(|e| CliError::Data(format!("{}: record {}: {e}", path.display(), i + 1)))?;
        if row.object_id == 0 {
            return Err(CliError::Data(format!("{}: trial {} uses object id 0", path.display(), row.trial_id)));
        }
        let steps = trials.entry(row.trial_id.clone()).or_insert_with(|| {
            order.push(row.trial_id.clone());
            Vec::new()
        });
        steps.push((row.step, row.object_id));
    }
    order
        .into_iter()
        .map(|trial_id| {
            let mut steps = trials.remove(&trial_id).expect("recorded above");
            steps.sort_unstable();
            if steps.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(CliError::Data(format!("{}: trial {trial_id} repeats a step", path.display())));
            }
            Ok(ObjectSequence {
                subject_id: trial_subject(&trial_id).to_string(),
                objects: steps.into_iter().map(|(_, o)| o).collect(),
                trial_id,
            })
        })
        .collect()
}

pub fn load_corpus(events: &Path, objects: Option<&Path>) -> CliResult<Corpus> {
    let events = read_events(events)?;
    let sequences = objects.map(read_object_sequences).transpose()?.unwrap_or_default();
    Ok(Corpus::new(events, sequences)?)
}

pub fn write_events(path: &Path, events: &[TurnEvent]) -> CliResult<()> {
    let mut w = create(path)?;
    for e in events {
        let line = serde_json::to_string(&EventLine::from_event(e)).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_object_sequences(path: &Path, sequences: &[ObjectSequence]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for s in sequences {
        for (i, &object_id) in s.objects.iter().enumerate() {
            w.serialize(ObjectRow { trial_id: s.trial_id.clone(), step: i + 1, object_id })?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let reader = BufReader::new(open(path)?);
    let de = &mut serde_json::Deserializer::from_reader(reader);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Data(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

/// JSON config file; unknown or mistyped fields are reported with their
/// path and map to a config error.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

pub const BUNDLE_VERSION: u32 = 1;

/// A serialized model tagged with its kind and format version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle<T> {
    pub version: u32,
    pub kind: String,
    pub model: T,
}

pub fn save_bundle<T: Serialize>(path: &Path, kind: &str, model: &T) -> CliResult<()> {
    write_json(path, &Bundle { version: BUNDLE_VERSION, kind: kind.to_string(), model })
}

pub fn load_bundle<T: DeserializeOwned>(path: &Path, kind: &str) -> CliResult<T> {
    let b: Bundle<T> = read_json(path)?;
    if b.version != BUNDLE_VERSION {
        return Err(CliError::Data(format!("{}: unsupported bundle version {}", path.display(), b.version)));
    }
    if b.kind != kind {
        return Err(CliError::Data(format!("{}: holds a {} model, expected {kind}", path.display(), b.kind)));
    }
    Ok(b.model)
}

/// Reads only the kind of a bundle.
pub fn bundle_kind(path: &Path) -> CliResult<String> {
    #[derive(Deserialize)]
    struct Head {
        kind: String,
    }
    Ok(read_json::<Head>(path)?.kind)
}

pub fn write_raster(path: &Path, map: &FiringMap) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["neuron", "time_ms"])?;
    for &(n, t) in map.firings() {
        w.write_record([n.to_string(), t.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_raster(path: &Path, n_neurons: usize, duration: u16) -> CliResult<FiringMap> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut fired = Vec::new();
    for row in reader.deserialize::<(u16, u16)>() {
        fired.push(row?);
    }
    Ok(FiringMap::from_firings(n_neurons, duration, fired)?)
}

/// `m x B` matrix with a header row of bin indices.
pub fn write_descriptor(path: &Path, d: &NhnfDescriptor) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record((0..d.bins).map(|b| b.to_string()))?;
    for i in 0..d.maps {
        w.write_record(d.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_predictions(path: &Path) -> CliResult<Vec<PredictionRecord>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::Data(format!("{}: record {}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn write_curve(path: &Path, curve: &CurveSummary) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["tau", "f1_mean", "f1_std"])?;
    for ((t, m), s) in curve.taus.iter().zip(&curve.f1_mean).zip(&curve.f1_std) {
        w.write_record([t.to_string(), m.to_string(), s.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_object_predictions(path: &Path, predictions: &[ObjectPrediction], n_objects: usize) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["trial_id".to_string(), "step".into(), "true_object".into(), "pred_object".into()];
    header.extend((1..=n_objects).map(|j| format!("p{j}")));
    w.write_record(&header)?;
    for p in predictions {
        let mut row = vec![p.trial_id.clone(), p.step.to_string(), p.true_object.to_string(), p.pred_object.to_string()];
        row.extend(p.probs.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One label per line, or the `pred` column of a prediction CSV.
pub fn read_labels(path: &Path) -> CliResult<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    let column = match lines.peek() {
        Some(h) if h.contains(',') => {
            let c = h.split(',').position(|f| f.trim() == "pred").ok_or_else(|| {
                CliError::Data(format!("{}: CSV input needs a `pred` column", path.display()))
            })?;
            lines.next();
            Some(c)
        }
        _ => None,
    };
    lines
        .enumerate()
        .map(|(i, l)| {
            let field = match column {
                Some(c) => l.split(',').nth(c).unwrap_or(""),
                None => l,
            };
            field
                .trim()
                .parse::<i64>()
                .map_err(|e| CliError::Data(format!("{}: label {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_subjects() {
        assert_eq!(trial_subject("s03:t2"), "s03");
        assert_eq!(trial_subject("alone"), "alone");
    }

    #[test]
    fn sniffs_event_ids() {
        assert_eq!(sniff_event_id(r#"{"event_id": "e7", "data": [[NaN]]}"#), Some("e7"));
        assert_eq!(sniff_event_id("{}"), None);
    }
}
