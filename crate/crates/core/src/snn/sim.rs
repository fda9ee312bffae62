use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::encoding::{Stimulus, StimulusSchedule};
use super::network::{SpikingNetwork, MAX_DELAY_MS, W_MAX};
use super::neuron::{NeuronState, SPIKE_THRESHOLD};
use super::stdp::{StdpConfig, StdpMode};
use crate::descriptors::FiringMap;
use crate::{Error, Result};

pub const DEFAULT_SIM_MS: usize = 250;

const RING: usize = MAX_DELAY_MS as usize + 1;
const NEVER: i32 = i32::MIN;

/// Mutable dynamics of one network: neuron states plus spikes still in
/// flight along delayed synapses.
///
/// State is kept as parallel arrays so the integration loop vectorizes.
#[derive(Debug, Clone)]
pub struct NetworkState {
    v: Vec<f64>,
    u: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    input: Vec<f64>,
    ring: Vec<Vec<u32>>,
    t: u16,
}

impl NetworkState {
    /// All neurons at rest, nothing in flight, clock at 0.
    pub fn new(net: &SpikingNetwork) -> Self {
        let k = net.kernels();
        let n = k.len();
        let mut state = NetworkState {
            v: vec![0.0; n],
            u: vec![0.0; n],
            a: k.iter().map(|k| k.a).collect(),
            b: k.iter().map(|k| k.b).collect(),
            c: k.iter().map(|k| k.c).collect(),
            d: k.iter().map(|k| k.d).collect(),
            input: vec![0.0; n],
            ring: vec![Vec::new(); RING],
            t: 0,
        };
        state.reset(net);
        state
    }

    fn reset(&mut self, net: &SpikingNetwork) {
        for (i, k) in net.kernels().iter().enumerate() {
            let rest = NeuronState::rest(k);
            self.v[i] = rest.v;
            self.u[i] = rest.u;
        }
        self.ring.iter_mut().for_each(Vec::clear);
        self.t = 0;
    }

    pub fn time(&self) -> u16 {
        self.t
    }

    /// Membrane potentials (mV).
    pub fn potentials(&self) -> &[f64] {
        &self.v
    }

    pub fn neuron(&self, i: usize) -> NeuronState {
        NeuronState { v: self.v[i], u: self.u[i] }
    }

    /// Advances the clock by 1 ms with the given external stimuli and
    /// returns the neurons that fired, in ascending order.
    pub fn step(&mut self, net: &SpikingNetwork, stimuli: &[Stimulus]) -> Result<Vec<u16>> {
        let mut fired = Vec::new();
        self.advance(net, stimuli, None, |n| fired.push(n))?;
        Ok(fired)
    }

    fn advance(
        &mut self,
        net: &SpikingNetwork,
        stimuli: &[Stimulus],
        mut plastic: Option<&mut Plasticity>,
        mut on_fire: impl FnMut(u16),
    ) -> Result<()> {
        self.t += 1;
        let t = self.t;
        let now = i32::from(t);
        self.input.iter_mut().for_each(|x| *x = 0.0);
        for s in stimuli {
            self.input[s.neuron as usize] += s.current;
        }

        let slot = t as usize % RING;
        let synapses = net.synapses();
        let mut arrivals = core::mem::take(&mut self.ring[slot]);
        for &idx in &arrivals {
            let idx = idx as usize;
            let post = synapses[idx].post as usize;
            match plastic.as_deref_mut() {
                Some(p) => {
                    self.input[post] += p.weights[idx];
                    if net.is_plastic(idx) {
                        p.last_arrival[idx] = now;
                        let last = p.last_fire[post];
                        if last != NEVER {
                            p.change(idx, f64::from(last - now));
                        }
                    }
                }
                None => self.input[post] += synapses[idx].weight,
            }
        }
        arrivals.clear();
        self.ring[slot] = arrivals;

        // Same arithmetic as `NeuronState::tick`, split so the first pass
        // has no branches.
        for ((((v, u), a), b), input) in
            self.v.iter_mut().zip(self.u.iter_mut()).zip(&self.a).zip(&self.b).zip(&self.input)
        {
            let mut x = *v;
            x += 0.5 * ((0.04 * x + 5.0) * x + 140.0 - *u + input);
            x += 0.5 * ((0.04 * x + 5.0) * x + 140.0 - *u + input);
            *v = x;
            *u += a * (b * x - *u);
        }
        for i in 0..self.v.len() {
            // NaN also falls through to the check below.
            if self.v[i] < SPIKE_THRESHOLD {
                continue;
            }
            if !(self.v[i].is_finite() && self.u[i].is_finite()) {
                return Err(Error::NonFinite(format!("neuron {i} at t = {t} ms")));
            }
            self.v[i] = self.c[i];
            self.u[i] += self.d[i];
            on_fire(i as u16);
            for idx in net.outgoing(i) {
                let arrive = t as usize + synapses[idx].delay as usize;
                self.ring[arrive % RING].push(idx as u32);
            }
            if let Some(p) = plastic.as_deref_mut() {
                p.last_fire[i] = now;
                for &idx in net.incoming_excitatory(i) {
                    let arrived = p.last_arrival[idx as usize];
                    if arrived != NEVER {
                        p.change(idx as usize, f64::from(now - arrived));
                    }
                }
            }
        }
        Ok(())
    }
}

/// STDP bookkeeping for one presentation.
#[derive(Debug, Clone)]
pub(crate) struct Plasticity {
    cfg: StdpConfig,
    pub(crate) weights: Vec<f64>,
    pending: Vec<f64>,
    last_arrival: Vec<i32>,
    last_fire: Vec<i32>,
}

impl Plasticity {
    pub(crate) fn new(net: &SpikingNetwork, cfg: StdpConfig) -> Self {
        Plasticity {
            cfg,
            weights: net.synapses().iter().map(|s| s.weight).collect(),
            pending: vec![0.0; net.synapses().len()],
            last_arrival: vec![NEVER; net.synapses().len()],
            last_fire: vec![NEVER; net.n_neurons()],
        }
    }

    fn reset_timing(&mut self) {
        self.last_arrival.iter_mut().for_each(|x| *x = NEVER);
        self.last_fire.iter_mut().for_each(|x| *x = NEVER);
    }

    #[inline]
    fn change(&mut self, idx: usize, dt: f64) {
        let d = self.cfg.delta(dt);
        match self.cfg.mode {
            StdpMode::PerTick => self.weights[idx] = (self.weights[idx] + d).clamp(0.0, W_MAX),
            StdpMode::Batched => self.pending[idx] += d,
        }
    }

    fn flush(&mut self) {
        if self.cfg.mode == StdpMode::Batched {
            for (w, p) in self.weights.iter_mut().zip(self.pending.iter_mut()) {
                if *p != 0.0 {
                    *w = (*w + *p).clamp(0.0, W_MAX);
                    *p = 0.0;
                }
            }
        }
    }
}

fn check_schedule(net: &SpikingNetwork, schedule: &StimulusSchedule, duration_ms: usize) -> Result<u16> {
    if duration_ms == 0 || duration_ms > u16::MAX as usize - RING {
        return Err(Error::param("duration_ms", format!("unsupported duration {duration_ms}")));
    }
    let mut prev = 0;
    for s in &schedule.stimuli {
        if s.time_ms == 0 || s.time_ms as usize > duration_ms || s.time_ms < prev {
            return Err(Error::data(format!("stimulus at {} ms outside 1..={duration_ms} or out of order", s.time_ms)));
        }
        if s.neuron as usize >= net.n_neurons() || !s.current.is_finite() {
            return Err(Error::data(format!("invalid stimulus on neuron {}", s.neuron)));
        }
        prev = s.time_ms;
    }
    Ok(duration_ms as u16)
}

/// Reusable scratch space for repeated simulations of the same network.
#[derive(Debug, Clone)]
pub(crate) struct Simulator {
    state: NetworkState,
}

impl Simulator {
    pub(crate) fn new(net: &SpikingNetwork) -> Self {
        Simulator { state: NetworkState::new(net) }
    }

    pub(crate) fn run(
        &mut self,
        net: &SpikingNetwork,
        schedule: &StimulusSchedule,
        duration_ms: usize,
        mut plastic: Option<&mut Plasticity>,
    ) -> Result<FiringMap> {
        let duration = check_schedule(net, schedule, duration_ms)?;
        self.state.reset(net);
        if let Some(p) = plastic.as_deref_mut() {
            p.reset_timing();
        }
        let mut map = FiringMap::empty(net.n_neurons(), duration);
        let stimuli = &schedule.stimuli;
        let mut next = 0;
        for t in 1..=duration {
            let start = next;
            while next < stimuli.len() && stimuli[next].time_ms == t {
                next += 1;
            }
            self.state.advance(net, &stimuli[start..next], plastic.as_deref_mut(), |n| map.push(n, t))?;
        }
        if let Some(p) = plastic {
            p.flush();
        }
        Ok(map)
    }
}

/// Runs `duration_ms` ticks from rest with fixed weights.
pub fn simulate(net: &SpikingNetwork, schedule: &StimulusSchedule, duration_ms: usize) -> Result<FiringMap> {
    Simulator::new(net).run(net, schedule, duration_ms, None)
}

/// Runs `duration_ms` ticks from rest with STDP on excitatory synapses and
/// writes the learned weights back into `net`.
pub fn simulate_plastic(
    net: &mut SpikingNetwork,
    schedule: &StimulusSchedule,
    duration_ms: usize,
    stdp: &StdpConfig,
) -> Result<FiringMap> {
    stdp.validate()?;
    let mut plastic = Plasticity::new(net, *stdp);
    let map = Simulator::new(net).run(net, schedule, duration_ms, Some(&mut plastic))?;
    net.set_weights(&plastic.weights);
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::encoding::{map_levels, schedule_stimuli};
    use crate::snn::network::{build_network, KernelPair, N_EXCITATORY};

    fn schedule(seed: u64, levels: &[u8]) -> StimulusSchedule {
        schedule_stimuli(levels, &map_levels(40, seed).unwrap()).unwrap()
    }

    #[test]
    fn silent_without_input() {
        for pair in ["RS-LTS", "IB-FS", "CH-LTS"] {
            let net = build_network(KernelPair::parse(pair).unwrap(), 1).unwrap();
            let map = simulate(&net, &StimulusSchedule::default(), 250).unwrap();
            assert!(map.is_empty(), "{pair}");
            assert_eq!((map.n_neurons(), map.duration()), (250, 250));
        }
    }

    #[test]
    fn deterministic_and_pure() {
        let net = build_network(KernelPair::RS_LTS, 4).unwrap();
        let s = schedule(4, &[3, 10, 20, 30, 39, 0, 5]);
        let a = simulate(&net, &s, 250).unwrap();
        let b = simulate(&net, &s, 250).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        for &(n, t) in a.firings() {
            assert!((n as usize) < 250 && (1..=250).contains(&t));
        }
    }

    #[test]
    fn stimulated_neuron_fires_promptly() {
        let net = build_network(KernelPair::RS_LTS, 2).unwrap();
        let s = StimulusSchedule { stimuli: vec![Stimulus { time_ms: 1, neuron: 17, current: 20.0 }] };
        let map = simulate(&net, &s, 30).unwrap();
        assert_eq!(map.firings().first().map(|f| f.0), Some(17));
    }

    #[test]
    fn step_matches_simulate() {
        let net = build_network(KernelPair::RS_LTS, 6).unwrap();
        let s = schedule(6, &[1, 2, 3, 4, 5, 6, 7, 8]);
        let map = simulate(&net, &s, 120).unwrap();
        let mut state = NetworkState::new(&net);
        let mut fired = Vec::new();
        for t in 1..=120u16 {
            let stim: Vec<Stimulus> = s.stimuli.iter().filter(|x| x.time_ms == t).copied().collect();
            for n in state.step(&net, &stim).unwrap() {
                fired.push((n, t));
            }
        }
        assert_eq!(fired, map.firings());
    }

    #[test]
    fn arrivals_respect_delay() {
        // A lone spike from neuron 0 perturbs each target exactly `delay` ms later.
        let net = build_network(KernelPair::RS_LTS, 8).unwrap();
        let mut driven = NetworkState::new(&net);
        let mut quiet = NetworkState::new(&net);
        let stim = [Stimulus { time_ms: 1, neuron: 0, current: 200.0 }];
        assert_eq!(driven.step(&net, &stim).unwrap(), [0]);
        quiet.step(&net, &[]).unwrap();
        let mut delay = vec![None; net.n_neurons()];
        for s in &net.synapses()[net.outgoing(0)] {
            delay[s.post as usize] = Some(s.delay as u16);
        }
        // Checked until a target fires and starts its own cascade.
        for t in 2..=25u16 {
            let secondary = !driven.step(&net, &[]).unwrap().is_empty();
            quiet.step(&net, &[]).unwrap();
            for j in 1..net.n_neurons() {
                let same = driven.potentials()[j] == quiet.potentials()[j];
                match delay[j] {
                    Some(d) if t > d => assert!(!same, "neuron {j} t {t}"),
                    _ => assert!(same, "neuron {j} t {t}"),
                }
            }
            if secondary {
                break;
            }
        }
    }

    #[test]
    fn bad_schedule_rejected() {
        let net = build_network(KernelPair::RS_LTS, 1).unwrap();
        let late = StimulusSchedule { stimuli: vec![Stimulus { time_ms: 251, neuron: 0, current: 20.0 }] };
        assert!(simulate(&net, &late, 250).is_err());
        let nan = StimulusSchedule { stimuli: vec![Stimulus { time_ms: 3, neuron: 0, current: f64::NAN }] };
        assert!(simulate(&net, &nan, 250).is_err());
    }

    #[test]
    fn plasticity_changes_only_excitatory_weights() {
        let mut net = build_network(KernelPair::RS_LTS, 5).unwrap();
        let before = net.clone();
        let s = schedule(5, &[1, 9, 17, 25, 33, 2, 10, 18, 26, 34, 3, 11]);
        for mode in [StdpMode::PerTick, StdpMode::Batched] {
            let cfg = StdpConfig { mode, ..Default::default() };
            simulate_plastic(&mut net, &s, 250, &cfg).unwrap();
        }
        let mut changed = 0;
        for (a, b) in before.synapses().iter().zip(net.synapses()) {
            assert_eq!((a.pre, a.post, a.delay), (b.pre, b.post, b.delay));
            if (a.pre as usize) < N_EXCITATORY {
                assert!((0.0..=W_MAX).contains(&b.weight));
                changed += usize::from(a.weight != b.weight);
            } else {
                assert_eq!(a.weight, b.weight);
            }
        }
        assert!(changed > 0);
    }

    #[test]
    fn plastic_run_with_zero_rates_matches_frozen() {
        let mut net = build_network(KernelPair::RS_LTS, 7).unwrap();
        let s = schedule(7, &[4, 8, 15, 16, 23, 39]);
        let frozen = simulate(&net, &s, 250).unwrap();
        let cfg = StdpConfig { a_plus: 0.0, a_minus: 0.0, ..Default::default() };
        assert_eq!(simulate_plastic(&mut net, &s, 250, &cfg).unwrap(), frozen);
    }
}
