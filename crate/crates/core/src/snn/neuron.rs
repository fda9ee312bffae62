use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Membrane potential (mV) at which a neuron fires and resets.
pub const SPIKE_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeuronClass {
    Excitatory,
    Inhibitory,
}

/// Named cortical firing patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KernelPreset {
    /// Regular spiking.
    #[serde(rename = "RS")]
    Rs,
    /// Intrinsically bursting.
    #[serde(rename = "IB")]
    Ib,
    /// Chattering.
    #[serde(rename = "CH")]
    Ch,
    /// Fast spiking.
    #[serde(rename = "FS")]
    Fs,
    /// Low-threshold spiking.
    #[serde(rename = "LTS")]
    Lts,
}

impl KernelPreset {
    pub const ALL: [KernelPreset; 5] =
        [KernelPreset::Rs, KernelPreset::Ib, KernelPreset::Ch, KernelPreset::Fs, KernelPreset::Lts];

    pub fn kernel(self) -> NeuronKernel {
        let (a, b, c, d, class) = match self {
            KernelPreset::Rs => (0.02, 0.2, -65.0, 8.0, NeuronClass::Excitatory),
            KernelPreset::Ib => (0.02, 0.2, -55.0, 4.0, NeuronClass::Excitatory),
            KernelPreset::Ch => (0.02, 0.2, -50.0, 2.0, NeuronClass::Excitatory),
            KernelPreset::Fs => (0.1, 0.2, -65.0, 2.0, NeuronClass::Inhibitory),
            KernelPreset::Lts => (0.02, 0.25, -65.0, 2.0, NeuronClass::Inhibitory),
        };
        NeuronKernel { a, b, c, d, class }
    }

    pub fn class(self) -> NeuronClass {
        self.kernel().class
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelPreset::Rs => "RS",
            KernelPreset::Ib => "IB",
            KernelPreset::Ch => "CH",
            KernelPreset::Fs => "FS",
            KernelPreset::Lts => "LTS",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        KernelPreset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::param("kernel", format!("unknown preset {name:?}")))
    }
}

/// Izhikevich parameters: recovery time scale `a`, recovery sensitivity
/// `b`, reset potential `c` (mV) and recovery increment `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronKernel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub class: NeuronClass,
}

impl NeuronKernel {
    /// The preset these parameters match exactly, if any.
    pub fn preset(&self) -> Option<KernelPreset> {
        KernelPreset::ALL.into_iter().find(|p| p.kernel() == *self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub v: f64,
    pub u: f64,
}

impl NeuronState {
    /// `v = c`, `u = b * v`.
    pub fn rest(kernel: &NeuronKernel) -> Self {
        NeuronState { v: kernel.c, u: kernel.b * kernel.c }
    }

    /// `(dv/dt, du/dt)` in per-millisecond units.
    pub fn derivatives(&self, kernel: &NeuronKernel, current: f64) -> (f64, f64) {
        let dv = 0.04 * self.v * self.v + 5.0 * self.v + 140.0 - self.u + current;
        let du = kernel.a * (kernel.b * self.v - self.u);
        (dv, du)
    }

    /// Applies the after-spike reset if `v` reached threshold.
    #[inline]
    pub fn fire_and_reset(&mut self, kernel: &NeuronKernel) -> bool {
        if self.v >= SPIKE_THRESHOLD {
            self.v = kernel.c;
            self.u += kernel.d;
            true
        } else {
            false
        }
    }

    /// One 1 ms network tick: two 0.5 ms Euler steps for `v`, one 1 ms step
    /// for `u`, then threshold and reset. Returns whether the neuron fired.
    #[inline]
    pub fn tick(&mut self, kernel: &NeuronKernel, current: f64) -> bool {
        let mut v = self.v;
        v += 0.5 * ((0.04 * v + 5.0) * v + 140.0 - self.u + current);
        v += 0.5 * ((0.04 * v + 5.0) * v + 140.0 - self.u + current);
        self.v = v;
        self.u += kernel.a * (kernel.b * v - self.u);
        self.fire_and_reset(kernel)
    }

    /// One forward-Euler step of `dt` ms for both variables.
    pub fn euler(&mut self, kernel: &NeuronKernel, current: f64, dt: f64) -> bool {
        let (dv, du) = self.derivatives(kernel, current);
        self.v += dt * dv;
        self.u += dt * du;
        self.fire_and_reset(kernel)
    }
}

/// Spike times (ms) of an isolated neuron driven by a constant current
/// from rest, integrated with forward Euler at `dt` ms.
pub fn single_neuron_spikes(kernel: &NeuronKernel, current: f64, duration_ms: f64, dt: f64) -> Vec<f64> {
    let mut state = NeuronState::rest(kernel);
    let steps = libm::round(duration_ms / dt) as usize;
    (1..=steps).filter(|_| state.euler(kernel, current, dt)).map(|k| k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rs_derivatives_at_rest() {
        let k = KernelPreset::Rs.kernel();
        let s = NeuronState { v: -65.0, u: -13.0 };
        let (dv, du) = s.derivatives(&k, 0.0);
        assert!((dv + 3.0).abs() < 1e-12);
        assert!(du.abs() < 1e-12);
    }

    #[test]
    fn reset_after_threshold() {
        let k = KernelPreset::Rs.kernel();
        let mut s = NeuronState { v: 31.0, u: -10.0 };
        assert!(s.fire_and_reset(&k));
        assert_eq!(s.v, -65.0);
        assert_eq!(s.u, -2.0);
    }

    #[test]
    fn classes_of_presets() {
        for p in [KernelPreset::Rs, KernelPreset::Ib, KernelPreset::Ch] {
            assert_eq!(p.class(), NeuronClass::Excitatory);
        }
        for p in [KernelPreset::Fs, KernelPreset::Lts] {
            assert_eq!(p.class(), NeuronClass::Inhibitory);
        }
        assert_eq!(KernelPreset::parse("lts").unwrap(), KernelPreset::Lts);
        assert_eq!(KernelPreset::Ib.kernel().preset(), Some(KernelPreset::Ib));
    }

    #[test]
    fn quiet_at_rest_without_input() {
        for p in KernelPreset::ALL {
            let k = p.kernel();
            let mut s = NeuronState::rest(&k);
            for _ in 0..1000 {
                assert!(!s.tick(&k, 0.0), "{p:?} fired spontaneously");
            }
        }
    }

    #[test]
    fn tick_never_leaves_v_above_threshold() {
        let k = KernelPreset::Rs.kernel();
        let mut s = NeuronState::rest(&k);
        for t in 0..500 {
            s.tick(&k, if t % 3 == 0 { 20.0 } else { 0.0 });
            assert!(s.v < SPIKE_THRESHOLD);
        }
    }
}
