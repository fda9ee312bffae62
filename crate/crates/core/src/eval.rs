//! Leave-one-subject-out protocol, early-prediction curves and the
//! next-object benchmark.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::baselines::{HmmBaseline, IshiiModel, PngMatcher};
use crate::dataset::{Corpus, ObservationMatrix, TurnEvent};
use crate::exec::Executor;
use crate::metrics::{self, auc, weighted_f1_multiclass, Confusion};
use crate::objects::{train_object_models, train_object_models_with_validation, trigram_windows, BigramBaseline, ObjectConfig, ObjectHistory};
use crate::ttsnet::TtsnetModel;
use crate::{stats, Error, Result};

/// Anything that labels a partial observation: 1 = give.
pub trait EarlyPredictor: Sync {
    fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)>;
}

impl EarlyPredictor for TtsnetModel {
    fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        TtsnetModel::predict(self, x, tau)
    }
}

impl EarlyPredictor for HmmBaseline {
    fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        HmmBaseline::predict(self, x, tau)
    }
}

impl EarlyPredictor for IshiiModel {
    fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        IshiiModel::predict(self, x, tau)
    }
}

/// The polychronous-group baseline together with the networks it runs on.
pub struct PngPredictor<'a> {
    pub model: &'a TtsnetModel,
    pub matcher: PngMatcher,
}

impl EarlyPredictor for PngPredictor<'_> {
    fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        self.matcher.predict(self.model, x, tau)
    }
}

/// Predicts give for every event.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysGive;

impl EarlyPredictor for AlwaysGive {
    fn predict(&self, _: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::param("tau", format!("must lie in (0, 1], got {tau}")));
        }
        Ok((1, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub held_out: String,
    pub train: Corpus,
    pub test: Corpus,
}

/// One fold per subject, in corpus subject order.
pub fn loso_split(corpus: &Corpus) -> Result<Vec<Fold>> {
    if corpus.subjects.len() < 2 {
        return Err(Error::data("leave-one-subject-out needs at least two subjects"));
    }
    Ok(corpus
        .subjects
        .iter()
        .map(|s| Fold {
            held_out: s.clone(),
            train: corpus.restrict_to(&|x| x != s),
            test: corpus.restrict_to(&|x| x == s),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub event_id: String,
    pub tau: f64,
    pub label: u8,
    pub pred: u8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub held_out_subject: String,
    pub taus: Vec<f64>,
    pub confusions: Vec<Confusion>,
    pub f1: Vec<f64>,
    /// Event-major, tau-minor.
    pub records: Vec<PredictionRecord>,
}

/// Predicts every test event at every fraction.
pub fn evaluate_fold<P: EarlyPredictor, E: Executor>(
    predictor: &P,
    held_out: &str,
    events: &[TurnEvent],
    taus: &[f64],
    exec: &E,
) -> Result<FoldReport> {
    if events.is_empty() {
        return Err(Error::data("no test events"));
    }
    let per_event: Vec<Result<Vec<PredictionRecord>>> = exec.map_indexed(events.len(), |i| {
        let e = &events[i];
        taus.iter()
            .map(|&tau| {
                let (pred, score) = predictor.predict(&e.observation, tau)?;
                Ok(PredictionRecord { event_id: e.event_id.clone(), tau, label: e.label(), pred, score })
            })
            .collect()
    });
    let records: Vec<PredictionRecord> = per_event.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let mut confusions = vec![Confusion::default(); taus.len()];
    for (k, r) in records.iter().enumerate() {
        confusions[k % taus.len()].record(r.label, r.pred);
    }
    let f1 = confusions.iter().map(Confusion::f1).collect();
    Ok(FoldReport { held_out_subject: String::from(held_out), taus: taus.to_vec(), confusions, f1, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyCurve {
    pub taus: Vec<f64>,
    pub f1_values: Vec<f64>,
    pub auc: f64,
}

impl EarlyCurve {
    pub fn new(taus: Vec<f64>, f1_values: Vec<f64>) -> Result<Self> {
        if taus.len() != f1_values.len() {
            return Err(Error::data("one F1 value per fraction required"));
        }
        let expected = metrics::standard_taus();
        if taus.len() != expected.len() || taus.iter().zip(&expected).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::data("the curve must cover fractions 0.1, 0.2, ..., 1.0"));
        }
        let auc = auc(&f1_values)?;
        Ok(EarlyCurve { taus, f1_values, auc })
    }
}

/// F1 at each standard fraction on one test set.
pub fn f1_curve<P: EarlyPredictor, E: Executor>(predictor: &P, events: &[TurnEvent], exec: &E) -> Result<EarlyCurve> {
    let taus = metrics::standard_taus().to_vec();
    let report = evaluate_fold(predictor, "", events, &taus, exec)?;
    EarlyCurve::new(taus, report.f1)
}

/// Per-fraction mean and standard deviation of the per-fold F1, with the AUC
/// of the mean curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub taus: Vec<f64>,
    pub f1_mean: Vec<f64>,
    pub f1_std: Vec<f64>,
    pub auc: f64,
}

pub fn aggregate_folds(folds: &[FoldReport]) -> Result<CurveSummary> {
    let first = folds.first().ok_or_else(|| Error::data("no folds to aggregate"))?;
    let taus = first.taus.clone();
    if folds.iter().any(|f| f.taus != taus) {
        return Err(Error::data("folds were evaluated at different fractions"));
    }
    let column = |k: usize| -> Vec<f64> { folds.iter().map(|f| f.f1[k]).collect() };
    let f1_mean: Vec<f64> = (0..taus.len()).map(|k| stats::mean(&column(k))).collect();
    let f1_std: Vec<f64> = (0..taus.len()).map(|k| stats::std_dev(&column(k))).collect();
    let auc = EarlyCurve::new(taus.clone(), f1_mean.clone())?.auc;
    Ok(CurveSummary { taus, f1_mean, f1_std, auc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPrediction {
    pub trial_id: String,
    /// 1-based position of the predicted request within the trial.
    pub step: usize,
    pub true_object: u8,
    pub pred_object: u8,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectFoldReport {
    pub held_out_subject: String,
    pub hmm_weighted_f1: f64,
    pub bigram_weighted_f1: f64,
    pub predictions: Vec<ObjectPrediction>,
}

fn histories(corpus: &Corpus, cfg: &ObjectConfig) -> Result<Vec<(String, usize, ObjectHistory)>> {
    let mut out = Vec::new();
    for seq in &corpus.object_sequences {
        for (i, h) in trigram_windows(&seq.objects, cfg.order, cfg.n_objects)?.into_iter().enumerate() {
            if h.next.is_some() {
                out.push((seq.trial_id.clone(), i + 2, h));
            }
        }
    }
    Ok(out)
}

/// Leave-one-subject-out next-object prediction with the per-object HMMs
/// and the bigram baseline.
pub fn evaluate_objects<E: Executor>(corpus: &Corpus, cfg: &ObjectConfig, seed: u64, exec: &E) -> Result<Vec<ObjectFoldReport>> {
    let subjects: Vec<String> = {
        let mut s: Vec<String> = Vec::new();
        for seq in &corpus.object_sequences {
            if !s.contains(&seq.subject_id) {
                s.push(seq.subject_id.clone());
            }
        }
        s
    };
    if subjects.len() < 2 {
        return Err(Error::data("object evaluation needs sequences from at least two subjects"));
    }
    let classes: Vec<u8> = (1..=cfg.n_objects as u8).collect();
    exec.map_indexed(subjects.len(), |f| {
        let held = &subjects[f];
        let test = histories(&corpus.restrict_to(&|s| s == held), cfg)?;
        if test.is_empty() {
            return Err(Error::data(format!("subject {held} has no object transitions")));
        }
        let strip = |v: Vec<(String, usize, ObjectHistory)>| -> Vec<ObjectHistory> { v.into_iter().map(|(_, _, h)| h).collect() };
        let train_h = strip(histories(&corpus.restrict_to(&|s| s != held), cfg)?);
        let fold_seed = crate::rng::derive(seed, f as u64);
        // Restarts are picked on the next training subject when at least two
        // remain, otherwise on a random split.
        let models = if subjects.len() >= 3 {
            let val = &subjects[(f + 1) % subjects.len()];
            let fit = strip(histories(&corpus.restrict_to(&|s| s != held && s != val), cfg)?);
            let check = strip(histories(&corpus.restrict_to(&|s| s == val), cfg)?);
            train_object_models_with_validation(&fit, &check, cfg, fold_seed)?
        } else {
            train_object_models(&train_h, cfg, fold_seed)?
        };
        let bigram = BigramBaseline::fit(&train_h, cfg.n_objects);
        let mut truth = Vec::with_capacity(test.len());
        let mut hmm_pred = Vec::with_capacity(test.len());
        let mut bigram_pred = Vec::with_capacity(test.len());
        let mut predictions = Vec::with_capacity(test.len());
        for (trial_id, step, h) in test {
            let (probs, pred) = models.predict_next(&h.window)?;
            let t = h.next.expect("filtered above");
            truth.push(t);
            hmm_pred.push(pred);
            bigram_pred.push(bigram.predict(&h.window));
            predictions.push(ObjectPrediction { trial_id, step, true_object: t, pred_object: pred, probs });
        }
        Ok(ObjectFoldReport {
            held_out_subject: held.clone(),
            hmm_weighted_f1: weighted_f1_multiclass(&truth, &hmm_pred, &classes)?,
            bigram_weighted_f1: weighted_f1_multiclass(&truth, &bigram_pred, &classes)?,
            predictions,
        })
    })
    .into_iter()
    .collect()
}
