//! One-dimensional filter bank applied to every channel before selection.
//!
//! Kernels are expressed in samples at [`FILTER_SAMPLE_HZ`]:
//!
//! | filter                | kernel                                           |
//! |-----------------------|--------------------------------------------------|
//! | `Identity`            | delta                                            |
//! | `Deriv`               | `[-1, 0, 1] / 2`                                 |
//! | `DerivOfGaussian`     | first derivative of a Gaussian, sigma 2, +-3 sigma |
//! | `LaplacianOfGaussian` | second derivative of a Gaussian, sigma 2, zero sum |
//! | `Gabor1`, `Gabor2`    | Gaussian sigma 3 times cosine at 1 Hz / 3 Hz     |
//!
//! The derivative kernels are scaled so that a unit ramp (resp. a unit
//! parabola `t^2 / 2`) produces 1.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

pub const FILTER_SAMPLE_HZ: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FilterId {
    Identity,
    Deriv,
    DerivOfGaussian,
    LaplacianOfGaussian,
    Gabor1,
    Gabor2,
}

impl FilterId {
    pub const ALL: [FilterId; 6] = [
        FilterId::Identity,
        FilterId::Deriv,
        FilterId::DerivOfGaussian,
        FilterId::LaplacianOfGaussian,
        FilterId::Gabor1,
        FilterId::Gabor2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterId::Identity => "identity",
            FilterId::Deriv => "deriv",
            FilterId::DerivOfGaussian => "dog",
            FilterId::LaplacianOfGaussian => "log",
            FilterId::Gabor1 => "gabor1",
            FilterId::Gabor2 => "gabor2",
        }
    }
}

fn gaussian(sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let half = libm::ceil(3.0 * sigma) as i32;
    let ks: Vec<f64> = (-half..=half).map(f64::from).collect();
    let g = ks.iter().map(|k| libm::exp(-k * k / (2.0 * sigma * sigma))).collect();
    (ks, g)
}

/// Kernel taps, centred (odd length).
pub fn filter_kernel(filter: FilterId) -> Vec<f64> {
    match filter {
        FilterId::Identity => vec![1.0],
        FilterId::Deriv => vec![-0.5, 0.0, 0.5],
        FilterId::DerivOfGaussian => {
            let (ks, g) = gaussian(2.0);
            let w: Vec<f64> = ks.iter().zip(&g).map(|(k, g)| k * g).collect();
            let gain: f64 = ks.iter().zip(&w).map(|(k, w)| k * w).sum();
            w.into_iter().map(|w| w / gain).collect()
        }
        FilterId::LaplacianOfGaussian => {
            let sigma: f64 = 2.0;
            let (ks, g) = gaussian(sigma);
            let s2 = sigma * sigma;
            let raw: Vec<f64> = ks.iter().zip(&g).map(|(k, g)| (k * k / (s2 * s2) - 1.0 / s2) * g).collect();
            let offset = raw.iter().sum::<f64>() / raw.len() as f64;
            let w: Vec<f64> = raw.into_iter().map(|w| w - offset).collect();
            let gain: f64 = ks.iter().zip(&w).map(|(k, w)| w * k * k / 2.0).sum();
            w.into_iter().map(|w| w / gain).collect()
        }
        FilterId::Gabor1 | FilterId::Gabor2 => {
            let hz = if filter == FilterId::Gabor1 { 1.0 } else { 3.0 };
            let (ks, g) = gaussian(3.0);
            let total: f64 = g.iter().sum();
            ks.iter()
                .zip(&g)
                .map(|(k, g)| g / total * libm::cos(2.0 * PI * hz * k / FILTER_SAMPLE_HZ))
                .collect()
        }
    }
}

/// Same-length correlation with edge replication.
pub fn apply_filter(channel: &[f64], filter: FilterId) -> Vec<f64> {
    if filter == FilterId::Identity {
        return channel.to_vec();
    }
    let kernel = filter_kernel(filter);
    let half = (kernel.len() / 2) as isize;
    let last = channel.len() as isize - 1;
    (0..channel.len() as isize)
        .map(|t| {
            kernel
                .iter()
                .enumerate()
                .map(|(i, w)| w * channel[(t + i as isize - half).clamp(0, last) as usize])
                .sum()
        })
        .collect()
}

/// All six encodings of one channel, in [`FilterId::ALL`] order.
pub fn filter_bank_encode(channel: &[f64]) -> [Vec<f64>; 6] {
    FilterId::ALL.map(|f| apply_filter(channel, f))
}
