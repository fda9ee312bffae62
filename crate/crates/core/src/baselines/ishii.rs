use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{grid_search, Classifier, LinearSvm, Standardizer, SvmConfig};
use crate::dataset::{slice_partial, Corpus, ObservationMatrix};
use crate::rng::{self, tags};
use crate::{Error, Result};

/// MIN, MAX, AMP, DUR, SLO, MO, AM, FQ, MEAN, STD, LAST.
pub const ISHII_FEATURES_PER_CHANNEL: usize = 11;

/// Grand per-channel mean and standard deviation of the training signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScaleStats {
    pub fn fit(corpus: &Corpus) -> Result<Self> {
        let m = corpus.n_channels();
        let mut sum = vec![0.0; m];
        let mut sq = vec![0.0; m];
        let mut n = 0usize;
        for e in &corpus.events {
            let x = &e.observation;
            for r in 0..x.rows() {
                for (c, v) in x.row(r).iter().enumerate() {
                    sum[c] += v;
                    sq[c] += v * v;
                }
            }
            n += x.rows();
        }
        if n == 0 {
            return Err(Error::data("no samples to scale"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let std: Vec<f64> =
            sq.iter().zip(&mean).map(|(q, mu)| libm::sqrt((q / n as f64 - mu * mu).max(0.0))).collect();
        let stats = ScaleStats { mean, std };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.std.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::degenerate(format!("channel {c} has zero spread")));
        }
        Ok(())
    }

    /// Maps `mean - std` to 0 and `mean + std` to 1, clamping outside.
    pub fn scale(&self, channel: usize, v: f64) -> f64 {
        let (mu, s) = (self.mean[channel], self.std[channel]);
        ((v - (mu - s)) / (2.0 * s)).clamp(0.0, 1.0)
    }
}

/// Movement runs of a scaled channel: a run starts when the signal leaves
/// the band of `threshold` around the last quiet sample and ends when it
/// comes back. Returns the amplitude of each run.
fn movement_runs(s: &[f64], threshold: f64) -> Vec<f64> {
    let mut runs = Vec::new();
    let mut anchor = s[0];
    let mut amp: Option<f64> = None;
    for &v in &s[1..] {
        let d = libm::fabs(v - anchor);
        if d > threshold {
            amp = Some(amp.map_or(d, |a| a.max(d)));
        } else {
            if let Some(a) = amp.take() {
                runs.push(a);
            }
            anchor = v;
        }
    }
    runs.extend(amp);
    runs
}

fn zero_crossings(s: &[f64]) -> usize {
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let centered: Vec<f64> = s.iter().map(|v| v - mean).filter(|v| libm::fabs(*v) > 1e-12).collect();
    centered.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

/// Eleven shape and movement statistics per channel, concatenated.
pub fn ishii_features(x: &ObservationMatrix, stats: &ScaleStats, threshold: f64) -> Result<Vec<f64>> {
    stats.validate()?;
    if x.cols() != stats.mean.len() {
        return Err(Error::data(format!("{} channels, scaler expects {}", x.cols(), stats.mean.len())));
    }
    let dur = x.rows() as f64 / x.sample_hz();
    let mut out = Vec::with_capacity(x.cols() * ISHII_FEATURES_PER_CHANNEL);
    for c in 0..x.cols() {
        let s: Vec<f64> = x.column(c).into_iter().map(|v| stats.scale(c, v)).collect();
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let amp = max - min;
        let runs = movement_runs(&s, threshold);
        let mo = runs.len() as f64 / dur;
        let am = if runs.is_empty() { 0.0 } else { runs.iter().sum::<f64>() / runs.len() as f64 };
        let fq = zero_crossings(&s) as f64 / dur;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let std = libm::sqrt(s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / s.len() as f64);
        out.extend_from_slice(&[min, max, amp, dur, amp / dur, mo, am, fq, mean, std, s[s.len() - 1]]);
    }
    Ok(out)
}

/// Random Fourier features approximating `exp(-gamma |x - y|^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffMap {
    pub gamma: f64,
    /// `dim x input` standard normal directions, unscaled.
    pub directions: Vec<Vec<f64>>,
    pub phases: Vec<f64>,
}

impl RffMap {
    pub fn new(input_dim: usize, dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", "must be positive and finite"));
        }
        if dim == 0 {
            return Err(Error::param("rff_dim", "must be positive"));
        }
        let mut rng = rng::stream(seed, tags::RFF);
        let directions = (0..dim).map(|_| (0..input_dim).map(|_| rng::normal(&mut rng)).collect()).collect();
        let phases = (0..dim).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        Ok(RffMap { gamma, directions, phases })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let scale = libm::sqrt(2.0 * self.gamma);
        let norm = libm::sqrt(2.0 / self.directions.len() as f64);
        self.directions
            .iter()
            .zip(&self.phases)
            .map(|(w, b)| norm * libm::cos(scale * w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IshiiConfig {
    pub movement_threshold: f64,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub rff_dim: usize,
    pub epochs: usize,
    pub folds: usize,
}

impl Default for IshiiConfig {
    fn default() -> Self {
        IshiiConfig {
            movement_threshold: 0.1,
            c_grid: vec![1.0, 10.0, 100.0],
            gamma_grid: vec![0.1, 0.01, 0.001],
            rff_dim: 500,
            epochs: 20,
            folds: 5,
        }
    }
}

impl IshiiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.movement_threshold.is_finite() && self.movement_threshold >= 0.0) {
            return Err(Error::param("movement_threshold", "must be finite and non-negative"));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::param("c_grid", "must be non-empty and positive"));
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::param("gamma_grid", "must be non-empty and positive"));
        }
        if self.rff_dim == 0 {
            return Err(Error::param("rff_dim", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be positive"));
        }
        if self.folds < 2 {
            return Err(Error::param("folds", "must be at least 2"));
        }
        Ok(())
    }
}

/// Kernel SVM on top of [`ishii_features`], trained as a linear SVM on
/// standardized random Fourier features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IshiiModel {
    pub movement_threshold: f64,
    pub scale: ScaleStats,
    pub rff: RffMap,
    pub rff_stats: Standardizer,
    pub svm: LinearSvm,
}

struct Fitted {
    rff: RffMap,
    stats: Standardizer,
    svm: LinearSvm,
}

impl Classifier for Fitted {
    fn score(&self, x: &[f64]) -> f64 {
        self.svm.score(&self.stats.apply(&self.rff.apply(x)))
    }
}

fn fit_kernel(x: &[Vec<f64>], y: &[u8], c: f64, gamma: f64, cfg: &IshiiConfig, seed: u64) -> Result<Fitted> {
    let rff = RffMap::new(x[0].len(), cfg.rff_dim, gamma, seed)?;
    let z: Vec<Vec<f64>> = x.iter().map(|r| rff.apply(r)).collect();
    let stats = Standardizer::fit(&z)?;
    let (svm, _) = LinearSvm::fit(&stats.apply_all(&z), y, &SvmConfig { c, epochs: cfg.epochs, seed })?;
    Ok(Fitted { rff, stats, svm })
}

impl IshiiModel {
    /// Fits on precomputed feature vectors; `(C, gamma)` is chosen by
    /// stratified cross-validated F1 when the grids hold more than one pair.
    pub fn fit_features(
        x: &[Vec<f64>],
        y: &[u8],
        scale: ScaleStats,
        cfg: &IshiiConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        crate::classify::check_training_set(x, y)?;
        let grid: Vec<(f64, f64)> =
            cfg.c_grid.iter().flat_map(|&c| cfg.gamma_grid.iter().map(move |&g| (c, g))).collect();
        let &(c, gamma) = match grid.len() {
            0 => return Err(Error::param("c_grid", "C and gamma grids must be non-empty")),
            1 => &grid[0],
            _ => {
                let result = grid_search(x, y, &grid, cfg.folds, seed, |&(c, g), xs, ys| {
                    fit_kernel(xs, ys, c, g, cfg, seed)
                })?;
                &grid[result.best]
            }
        };
        let f = fit_kernel(x, y, c, gamma, cfg, seed)?;
        Ok(IshiiModel { movement_threshold: cfg.movement_threshold, scale, rff: f.rff, rff_stats: f.stats, svm: f.svm })
    }

    pub fn train(corpus: &Corpus, cfg: &IshiiConfig, seed: u64) -> Result<Self> {
        corpus.require_both_classes()?;
        let scale = ScaleStats::fit(corpus)?;
        let x: Vec<Vec<f64>> = corpus
            .events
            .iter()
            .map(|e| ishii_features(&e.observation, &scale, cfg.movement_threshold))
            .collect::<Result<_>>()?;
        Self::fit_features(&x, &corpus.labels(), scale, cfg, seed)
    }

    pub fn score_features(&self, f: &[f64]) -> f64 {
        self.svm.score(&self.rff_stats.apply(&self.rff.apply(f)))
    }

    pub fn predict(&self, x: &ObservationMatrix, tau: f64) -> Result<(u8, f64)> {
        let f = ishii_features(&slice_partial(x, tau)?, &self.scale, self.movement_threshold)?;
        let score = self.score_features(&f);
        Ok((u8::from(score >= 0.0), score))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{fit_classifier, ClassifierConfig};
    use alloc::string::ToString;

    fn matrix(cols: &[Vec<f64>]) -> ObservationMatrix {
        let names = (0..cols.len()).map(|i| i.to_string()).collect();
        ObservationMatrix::from_columns(cols, 20.0, names).unwrap()
    }

    #[test]
    fn scaling_endpoints() {
        let s = ScaleStats { mean: vec![2.0], std: vec![0.5] };
        assert_eq!(s.scale(0, 2.5), 1.0);
        assert_eq!(s.scale(0, 2.0), 0.5);
        assert_eq!(s.scale(0, 1.5), 0.0);
        assert_eq!(s.scale(0, 100.0), 1.0);
        assert!(ScaleStats { mean: vec![0.0], std: vec![0.0] }.validate().is_err());
    }

    #[test]
    fn constant_channel() {
        let s = ScaleStats { mean: vec![0.0], std: vec![1.0] };
        let f = ishii_features(&matrix(&[vec![0.3; 40]]), &s, 0.1).unwrap();
        let (min, max, amp, dur, slo, mo, am, fq) = (f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]);
        assert_eq!(min, max);
        assert_eq!((amp, slo, mo, am, fq), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(dur, 2.0);
    }

    #[test]
    fn shape_statistics() {
        // Scaled values: 0.25 ramping to 0.75 over 80 samples (4 s).
        let s = ScaleStats { mean: vec![0.0], std: vec![1.0] };
        let col: Vec<f64> = (0..80).map(|i| -0.5 + i as f64 / 79.0).collect();
        let f = ishii_features(&matrix(std::slice::from_ref(&col)), &s, 0.1).unwrap();
        assert!((f[0] - 0.25).abs() < 1e-12 && (f[1] - 0.75).abs() < 1e-12);
        assert_eq!(f[2], f[1] - f[0]);
        assert_eq!(f[3], 4.0);
        assert_eq!(f[4], f[2] / f[3]);
        // Slow drift never leaves the band around the previous sample.
        assert_eq!(f[5], 0.0);
        // DUR doubles with the length at a fixed rate.
        let twice: Vec<f64> = col.iter().chain(&col).copied().collect();
        assert_eq!(ishii_features(&matrix(&[twice]), &s, 0.1).unwrap()[3], 8.0);
    }

    #[test]
    fn movement_definition() {
        let runs = movement_runs(&[0.0, 0.05, 0.5, 0.6, 0.05, 0.0, 0.0, 0.3], 0.1);
        assert_eq!(runs.len(), 2);
        assert!((runs[0] - 0.55).abs() < 1e-12);
        assert!((runs[1] - 0.3).abs() < 1e-12);
        assert_eq!(zero_crossings(&[0.0, 1.0, 0.0, 1.0]), 3);
    }

    #[test]
    fn offset_invariance() {
        let s = ScaleStats { mean: vec![0.0, 1.0], std: vec![1.0, 2.0] };
        let a = matrix(&[(0..30).map(|i| libm::sin(i as f64)).collect(), vec![1.0; 30]]);
        let mut shifted = crate::dataset::TurnEvent::new("e", crate::dataset::TurnKind::Keep, "s", 0.0, a.clone());
        shifted.start_time = 1000.0;
        assert_eq!(ishii_features(&a, &s, 0.1).unwrap(), ishii_features(&shifted.observation, &s, 0.1).unwrap());
    }

    fn toy_linear(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = rng::stream(seed, 0);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng::normal(&mut rng), rng::normal(&mut rng)]).collect();
        let y = x.iter().map(|r| u8::from(r[0] + 0.5 * r[1] > 0.0)).collect();
        (x, y)
    }

    #[test]
    fn small_gamma_behaves_linearly() {
        let (x, y) = toy_linear(300, 1);
        let cfg = IshiiConfig { c_grid: vec![10.0], gamma_grid: vec![1e-4], epochs: 40, ..Default::default() };
        let scale = ScaleStats { mean: vec![0.0; 2], std: vec![1.0; 2] };
        let k = IshiiModel::fit_features(&x, &y, scale, &cfg, 3).unwrap();
        let lin = fit_classifier(&x, &y, &ClassifierConfig::LinearSvm { c_grid: vec![10.0], epochs: 40 }, 3).unwrap();
        let agree = x.iter().filter(|r| u8::from(k.score_features(r) >= 0.0) == lin.decide(r)).count();
        assert!(agree as f64 >= 0.95 * x.len() as f64, "{agree}");
    }

    #[test]
    fn circles_are_separable() {
        let mut rng = rng::stream(5, 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..400 {
            let r = if i % 2 == 0 { 1.0 } else { 3.0 } + 0.2 * rng::normal(&mut rng);
            let a = rng.random::<f64>() * 2.0 * PI;
            x.push(vec![r * libm::cos(a), r * libm::sin(a)]);
            y.push((i % 2) as u8);
        }
        let cfg = IshiiConfig { c_grid: vec![10.0], gamma_grid: vec![0.5], epochs: 40, ..Default::default() };
        let scale = ScaleStats { mean: vec![0.0; 2], std: vec![1.0; 2] };
        let m = IshiiModel::fit_features(&x, &y, scale.clone(), &cfg, 9).unwrap();
        let acc = x.iter().zip(&y).filter(|(r, &l)| u8::from(m.score_features(r) >= 0.0) == l).count();
        assert!(acc as f64 >= 0.9 * x.len() as f64, "{acc}");
        assert_eq!(m, IshiiModel::fit_features(&x, &y, scale, &cfg, 9).unwrap());
    }
}
