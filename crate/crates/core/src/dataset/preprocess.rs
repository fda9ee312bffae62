use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Corpus, ObservationMatrix};
use crate::{Error, Result};

/// Rows kept for a partial observation: `max(1, ceil(tau * rows))`.
///
/// A 1e-9 slack absorbs binary rounding, so `0.3 * 10` keeps 3 rows and not 4.
pub fn partial_rows(rows: usize, tau: f64) -> usize {
    let kept = libm::ceil(tau * rows as f64 - 1e-9) as usize;
    kept.clamp(1, rows)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::param("tau", format!("must lie in (0, 1], got {tau}")));
    }
    Ok(())
}

/// First `tau` fraction of the rows (by sample count), all columns.
pub fn slice_partial(x: &ObservationMatrix, tau: f64) -> Result<ObservationMatrix> {
    check_tau(tau)?;
    let keep = partial_rows(x.rows(), tau);
    if keep == x.rows() {
        return Ok(x.clone());
    }
    ObservationMatrix::new(
        keep,
        x.cols(),
        x.data()[..keep * x.cols()].to_vec(),
        x.sample_hz(),
        x.channel_names().to_vec(),
    )
}

/// Exponentially weighted moving average seeded with the first sample.
pub fn ewma_smooth(series: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::data("cannot smooth an empty series"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut prev = series[0];
    out.push(prev);
    for &raw in &series[1..] {
        prev = alpha * raw + (1.0 - alpha) * prev;
        out.push(prev);
    }
    Ok(out)
}

/// Per-channel grand mean and pooled standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Channels with (near) zero variance; they pass through unscaled.
    pub constant: Vec<bool>,
}

impl ChannelStats {
    const MIN_STD: f64 = 1e-12;

    pub fn fit<'a>(matrices: impl IntoIterator<Item = &'a ObservationMatrix>, cols: usize) -> Result<Self> {
        let mut sum = alloc::vec![0.0; cols];
        let mut n = 0usize;
        let mats: Vec<&ObservationMatrix> = matrices.into_iter().collect();
        for x in &mats {
            if x.cols() != cols {
                return Err(Error::data(format!("expected {cols} channels, got {}", x.cols())));
            }
            for r in 0..x.rows() {
                for (s, v) in sum.iter_mut().zip(x.row(r)) {
                    *s += v;
                }
            }
            n += x.rows();
        }
        if n == 0 {
            return Err(Error::data("no samples to compute channel statistics"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut sq = alloc::vec![0.0; cols];
        for x in &mats {
            for r in 0..x.rows() {
                for ((s, v), m) in sq.iter_mut().zip(x.row(r)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
        }
        let std: Vec<f64> = sq.iter().map(|s| libm::sqrt(s / n as f64)).collect();
        let constant: Vec<bool> = std.iter().map(|&s| s < Self::MIN_STD).collect();
        for (c, &flat) in constant.iter().enumerate() {
            if flat {
                log::warn!("channel {c} has zero variance; passing it through unscaled");
            }
        }
        Ok(ChannelStats { mean, std, constant })
    }

    pub fn apply(&self, x: &ObservationMatrix) -> Result<ObservationMatrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::data(format!("expected {} channels, got {}", self.mean.len(), x.cols())));
        }
        x.map_columns(|c, col| {
            if self.constant[c] {
                col.to_vec()
            } else {
                col.iter().map(|v| (v - self.mean[c]) / self.std[c]).collect()
            }
        })
    }
}

/// Z-normalizes every channel with statistics pooled over all events of both
/// classes. The returned statistics can be reapplied to held-out data.
pub fn znormalize(corpus: &Corpus) -> Result<(Corpus, ChannelStats)> {
    let stats = ChannelStats::fit(corpus.events.iter().map(|e| &e.observation), corpus.n_channels())?;
    let events = corpus
        .events
        .iter()
        .map(|e| Ok(e.with_observation(stats.apply(&e.observation)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((corpus.with_events(events), stats))
}

fn interpolate_rows(x: &ObservationMatrix, positions: &[f64]) -> Result<ObservationMatrix> {
    let last = x.rows() - 1;
    let mut data = Vec::with_capacity(positions.len() * x.cols());
    for &p in positions {
        let lo = (libm::floor(p) as usize).min(last);
        let hi = (lo + 1).min(last);
        let frac = p - lo as f64;
        let (a, b) = (x.row(lo), x.row(hi));
        data.extend(a.iter().zip(b).map(|(u, v)| if frac == 0.0 { *u } else { u + (v - u) * frac }));
    }
    ObservationMatrix::new(positions.len(), x.cols(), data, x.sample_hz(), x.channel_names().to_vec())
}

fn grid_position(j: usize, source_len: usize, target_len: usize) -> f64 {
    j as f64 * (source_len - 1) as f64 / (target_len - 1) as f64
}

/// Linear interpolation along time to exactly `target_len` rows.
/// Endpoints are preserved.
pub fn resample_event(x: &ObservationMatrix, target_len: usize) -> Result<ObservationMatrix> {
    if target_len < 2 {
        return Err(Error::param("target_len", "must be at least 2"));
    }
    if x.rows() < 2 {
        return Err(Error::data("need at least 2 rows to resample"));
    }
    if x.rows() == target_len {
        return Ok(x.clone());
    }
    let positions: Vec<f64> = (0..target_len).map(|j| grid_position(j, x.rows(), target_len)).collect();
    interpolate_rows(x, &positions)
}

/// Resamples a prefix of an event onto the grid the full event would use.
///
/// `prefix` holds the first rows of an event that has `full_len` rows. Only
/// grid points falling inside the prefix are produced, and each is
/// interpolated from prefix rows alone. With the whole event as prefix this
/// equals [`resample_event`] bit for bit.
pub fn resample_prefix(prefix: &ObservationMatrix, full_len: usize, target_len: usize) -> Result<ObservationMatrix> {
    if target_len < 2 {
        return Err(Error::param("target_len", "must be at least 2"));
    }
    if full_len < 2 {
        return Err(Error::data("need at least 2 rows to resample"));
    }
    if prefix.rows() > full_len {
        return Err(Error::data("prefix is longer than the full event"));
    }
    if prefix.rows() == full_len {
        return resample_event(prefix, target_len);
    }
    let limit = (prefix.rows() - 1) as f64;
    let positions: Vec<f64> = (0..target_len)
        .map(|j| grid_position(j, full_len, target_len))
        .take_while(|&p| p <= limit)
        .collect();
    interpolate_rows(prefix, &positions)
}

#[cfg(test)]
fn column_moments(corpus: &Corpus, c: usize) -> (f64, f64) {
    use crate::stats;
    let vals: Vec<f64> = corpus.events.iter().flat_map(|e| e.observation.column(c)).collect();
    (stats::mean(&vals), stats::std_dev(&vals))
}
