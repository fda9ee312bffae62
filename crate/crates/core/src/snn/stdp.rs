use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const A_PLUS: f64 = 0.1;
pub const A_MINUS: f64 = 0.12;
pub const TAU_PLUS: f64 = 20.0;
pub const TAU_MINUS: f64 = 20.0;

/// When accumulated weight changes reach the synapses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdpMode {
    /// Every change is applied in the tick it occurs.
    #[default]
    PerTick,
    /// Changes are summed and applied once at the end of a presentation.
    Batched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StdpConfig {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub mode: StdpMode,
}

impl Default for StdpConfig {
    fn default() -> Self {
        StdpConfig { a_plus: A_PLUS, a_minus: A_MINUS, tau_plus: TAU_PLUS, tau_minus: TAU_MINUS, mode: StdpMode::PerTick }
    }
}

impl StdpConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a_plus", self.a_plus), ("a_minus", self.a_minus)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and non-negative"));
            }
        }
        for (name, v) in [("tau_plus", self.tau_plus), ("tau_minus", self.tau_minus)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and positive"));
            }
        }
        Ok(())
    }

    /// Weight change for a postsynaptic firing `dt` ms after a presynaptic
    /// arrival (negative `dt`: the firing came first).
    #[inline]
    pub fn delta(&self, dt: f64) -> f64 {
        if dt >= 0.0 {
            self.a_plus * libm::exp(-dt / self.tau_plus)
        } else {
            -self.a_minus * libm::exp(dt / self.tau_minus)
        }
    }
}

/// [`StdpConfig::delta`] with the default constants, taking the arrival and
/// firing times in ms.
pub fn stdp_delta(arrival_ms: f64, post_fire_ms: f64) -> f64 {
    StdpConfig::default().delta(post_fire_ms - arrival_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let p = stdp_delta(10.0, 15.0);
        assert!((p - 0.1 * (-0.25f64).exp()).abs() < 1e-15);
        assert!((p - 0.0779).abs() < 1e-4);
        let d = stdp_delta(15.0, 10.0);
        assert!((d + 0.12 * (-0.25f64).exp()).abs() < 1e-15);
        assert!((d + 0.0935).abs() < 1e-4);
    }

    #[test]
    fn validation() {
        assert!(StdpConfig::default().validate().is_ok());
        assert!(StdpConfig { tau_plus: 0.0, ..Default::default() }.validate().is_err());
        assert!(StdpConfig { a_minus: -1.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn magnitude_decreases_with_lag(a in 0.0f64..200.0, gap in 0.01f64..100.0) {
            let b = a + gap;
            let cfg = StdpConfig::default();
            prop_assert!(cfg.delta(a) > cfg.delta(b));
            prop_assert!(cfg.delta(a) > 0.0);
            // Depression side uses strictly positive lags.
            let (na, nb) = (-(a + 1e-3), -(b + 1e-3));
            prop_assert!(cfg.delta(na).abs() > cfg.delta(nb).abs());
            prop_assert!(cfg.delta(na) < 0.0);
        }
    }
}
