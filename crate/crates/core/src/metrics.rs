//! Classification metrics and robust spread.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::stats;
use crate::{Error, Result};

/// Binary confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_predictions(labels: &[u8], preds: &[u8]) -> Result<Self> {
        if labels.len() != preds.len() {
            return Err(Error::data("labels and predictions differ in length"));
        }
        let mut c = Confusion::default();
        for (&y, &p) in labels.iter().zip(preds) {
            c.record(y, p);
        }
        Ok(c)
    }

    pub fn record(&mut self, label: u8, pred: u8) {
        match (label != 0, pred != 0) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn add(&self, other: &Confusion) -> Confusion {
        Confusion {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn f1(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }
}

/// F1 of the positive class. Zero whenever `tp` is zero (including the
/// empty case), one when there are no errors.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    if fp == 0 && fn_ == 0 {
        return 1.0;
    }
    // 2PR / (P + R) with P and R expanded; one rounding instead of five.
    (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// Support-weighted mean of per-class F1 scores.
pub fn weighted_f1(f1s: &[f64], sizes: &[usize]) -> Result<f64> {
    if f1s.len() != sizes.len() || f1s.is_empty() {
        return Err(Error::data("weighted F1 needs one size per class"));
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::data("weighted F1 over empty classes"));
    }
    Ok(f1s.iter().zip(sizes).map(|(f, &n)| n as f64 / total as f64 * f).sum())
}

/// One-vs-rest F1 for every class in `classes`, weighted by true support.
pub fn weighted_f1_multiclass(truth: &[u8], pred: &[u8], classes: &[u8]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::data("labels and predictions differ in length"));
    }
    let mut f1s = Vec::with_capacity(classes.len());
    let mut sizes = Vec::with_capacity(classes.len());
    for &c in classes {
        let mut conf = Confusion::default();
        for (&t, &p) in truth.iter().zip(pred) {
            conf.record(u8::from(t == c), u8::from(p == c));
        }
        f1s.push(conf.f1());
        sizes.push(conf.tp + conf.fn_);
    }
    weighted_f1(&f1s, &sizes)
}

/// Prediction fractions 0.1, 0.2, ..., 1.0.
pub fn standard_taus() -> [f64; 10] {
    core::array::from_fn(|i| (i + 1) as f64 / 10.0)
}

pub const TAU_STEP: f64 = 0.1;

/// Left Riemann sum of the F1 curve with step 0.1 over the ten standard
/// fractions.
pub fn auc(f1_values: &[f64]) -> Result<f64> {
    if f1_values.len() != 10 {
        return Err(Error::data(format!("AUC needs 10 curve points, got {}", f1_values.len())));
    }
    // Dividing the sum keeps constant curves exact.
    Ok(f1_values.iter().sum::<f64>() / 10.0)
}

/// Median absolute deviation from the median, both medians taking the
/// lower middle element for even lengths.
pub fn mad(values: &[f64]) -> Result<f64> {
    let m = stats::median_lower(values).ok_or_else(|| Error::data("MAD of an empty vector"))?;
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    Ok(stats::median_lower(&dev).expect("non-empty"))
}

/// `"median ± mad"` with three decimals.
pub fn format_median_mad(values: &[f64]) -> Result<String> {
    let m = stats::median_lower(values).ok_or_else(|| Error::data("no values"))?;
    Ok(format!("{m:.3} ± {:.3}", mad(values)?))
}

/// Cohen's kappa between two raters.
pub fn cohen_kappa<T: Ord + Copy>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::data("rater label vectors differ in length"));
    }
    if a.is_empty() {
        return Err(Error::data("no ratings"));
    }
    let n = a.len() as f64;
    let mut cats: Vec<T> = a.iter().chain(b).copied().collect();
    cats.sort();
    cats.dedup();
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let p_e: f64 = cats
        .iter()
        .map(|c| {
            let pa = a.iter().filter(|x| *x == c).count() as f64 / n;
            let pb = b.iter().filter(|x| *x == c).count() as f64 / n;
            pa * pb
        })
        .sum();
    if p_e >= 1.0 {
        return Ok(if p_o >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
