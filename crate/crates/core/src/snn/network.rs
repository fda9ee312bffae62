use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::neuron::{KernelPreset, NeuronClass, NeuronKernel};
use crate::rng::{self, tags};
use crate::{Error, Result};

pub const N_TOTAL: usize = 250;
pub const N_EXCITATORY: usize = 200;
pub const N_INHIBITORY: usize = 50;
pub const SYNAPSES_PER_NEURON: usize = 25;
pub const MAX_DELAY_MS: u8 = 20;
pub const W_MAX: f64 = 10.0;
pub const INITIAL_EXCITATORY_WEIGHT: f64 = 6.0;
pub const INHIBITORY_WEIGHT: f64 = -5.0;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelPair {
    pub excitatory: KernelPreset,
    pub inhibitory: KernelPreset,
}

impl KernelPair {
    pub const RS_LTS: KernelPair = KernelPair { excitatory: KernelPreset::Rs, inhibitory: KernelPreset::Lts };

    pub fn validate(&self) -> Result<()> {
        if self.excitatory.class() != NeuronClass::Excitatory {
            return Err(Error::param("kernel_pair", format!("{} is not excitatory", self.excitatory.name())));
        }
        if self.inhibitory.class() != NeuronClass::Inhibitory {
            return Err(Error::param("kernel_pair", format!("{} is not inhibitory", self.inhibitory.name())));
        }
        Ok(())
    }

    /// Parses `"RS-LTS"` style names.
    pub fn parse(name: &str) -> Result<Self> {
        let (e, i) = name
            .split_once('-')
            .ok_or_else(|| Error::param("kernel_pair", format!("expected EXC-INH, got {name:?}")))?;
        let pair = KernelPair { excitatory: KernelPreset::parse(e)?, inhibitory: KernelPreset::parse(i)? };
        pair.validate()?;
        Ok(pair)
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.excitatory.name(), self.inhibitory.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: u16,
    pub post: u16,
    /// Conduction delay in whole milliseconds, `1..=20`.
    pub delay: u8,
    pub weight: f64,
}

/// Network of excitatory neurons `0..n_excitatory` followed by inhibitory
/// ones, each with a fixed fan-out of delayed synapses.
///
/// Synapses are stored grouped by presynaptic neuron. Weights change during
/// STDP training but the wiring never does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NetworkRecord", try_from = "NetworkRecord")]
pub struct SpikingNetwork {
    seed: u64,
    kernel_pair: KernelPair,
    kernels: Vec<NeuronKernel>,
    synapses: Vec<Synapse>,
    n_excitatory: usize,
    out_start: Vec<u32>,
    incoming_excitatory: Vec<Vec<u32>>,
}

impl SpikingNetwork {
    fn assemble(seed: u64, kernel_pair: KernelPair, kernels: Vec<NeuronKernel>, mut synapses: Vec<Synapse>) -> Result<Self> {
        kernel_pair.validate()?;
        let n = kernels.len();
        if n == 0 || n > u16::MAX as usize {
            return Err(Error::data(format!("network size {n} out of range")));
        }
        let n_excitatory = kernels.iter().take_while(|k| k.class == NeuronClass::Excitatory).count();
        if kernels[n_excitatory..].iter().any(|k| k.class == NeuronClass::Excitatory) {
            return Err(Error::data("excitatory neurons must precede inhibitory ones"));
        }
        synapses.sort_by_key(|s| s.pre);
        let mut out_start = vec![0u32; n + 1];
        for s in &synapses {
            if s.pre as usize >= n || s.post as usize >= n {
                return Err(Error::data(format!("synapse {}->{} references a missing neuron", s.pre, s.post)));
            }
            if !(1..=MAX_DELAY_MS).contains(&s.delay) {
                return Err(Error::data(format!("synapse {}->{} has delay {}", s.pre, s.post, s.delay)));
            }
            if !s.weight.is_finite() {
                return Err(Error::NonFinite(format!("weight of synapse {}->{}", s.pre, s.post)));
            }
            let pre_excitatory = (s.pre as usize) < n_excitatory;
            if pre_excitatory && !(0.0..=W_MAX).contains(&s.weight) {
                return Err(Error::data(format!("excitatory weight {} outside [0, {W_MAX}]", s.weight)));
            }
            if !pre_excitatory && (s.post as usize) >= n_excitatory {
                return Err(Error::data("inhibitory synapses may only target excitatory neurons"));
            }
            out_start[s.pre as usize + 1] += 1;
        }
        for i in 0..n {
            out_start[i + 1] += out_start[i];
        }
        let mut incoming_excitatory = vec![Vec::new(); n];
        for (idx, s) in synapses.iter().enumerate() {
            if (s.pre as usize) < n_excitatory {
                incoming_excitatory[s.post as usize].push(idx as u32);
            }
        }
        Ok(SpikingNetwork { seed, kernel_pair, kernels, synapses, n_excitatory, out_start, incoming_excitatory })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kernel_pair(&self) -> KernelPair {
        self.kernel_pair
    }

    pub fn n_neurons(&self) -> usize {
        self.kernels.len()
    }

    pub fn n_excitatory(&self) -> usize {
        self.n_excitatory
    }

    pub fn kernels(&self) -> &[NeuronKernel] {
        &self.kernels
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    /// Index range of the synapses leaving `pre`.
    #[inline]
    pub fn outgoing(&self, pre: usize) -> core::ops::Range<usize> {
        self.out_start[pre] as usize..self.out_start[pre + 1] as usize
    }

    /// Synapse indices from excitatory neurons into `post`.
    #[inline]
    pub fn incoming_excitatory(&self, post: usize) -> &[u32] {
        &self.incoming_excitatory[post]
    }

    #[inline]
    pub fn is_plastic(&self, synapse: usize) -> bool {
        (self.synapses[synapse].pre as usize) < self.n_excitatory
    }

    /// Excitatory weights in synapse order.
    pub fn excitatory_weights(&self) -> Vec<f64> {
        self.synapses.iter().filter(|s| (s.pre as usize) < self.n_excitatory).map(|s| s.weight).collect()
    }

    pub(crate) fn set_weights(&mut self, weights: &[f64]) {
        for (s, &w) in self.synapses.iter_mut().zip(weights) {
            s.weight = w;
        }
    }
}

/// Samples the fixed-size random topology for `kernel_pair`.
///
/// Every neuron gets 25 outgoing synapses to distinct targets chosen
/// uniformly: excitatory neurons reach any other neuron, inhibitory neurons
/// only excitatory ones. Delays are uniform in `1..=20` ms.
pub fn build_network(kernel_pair: KernelPair, seed: u64) -> Result<SpikingNetwork> {
    kernel_pair.validate()?;
    let mut rng = rng::stream(seed, tags::NETWORK);
    let kernels: Vec<NeuronKernel> = (0..N_TOTAL)
        .map(|i| if i < N_EXCITATORY { kernel_pair.excitatory.kernel() } else { kernel_pair.inhibitory.kernel() })
        .collect();
    let mut synapses = Vec::with_capacity(N_TOTAL * SYNAPSES_PER_NEURON);
    for pre in 0..N_TOTAL {
        let excitatory = pre < N_EXCITATORY;
        let targets: Vec<usize> = if excitatory {
            index::sample(&mut rng, N_TOTAL - 1, SYNAPSES_PER_NEURON)
                .into_iter()
                .map(|t| if t >= pre { t + 1 } else { t })
                .collect()
        } else {
            index::sample(&mut rng, N_EXCITATORY, SYNAPSES_PER_NEURON).into_vec()
        };
        for post in targets {
            synapses.push(Synapse {
                pre: pre as u16,
                post: post as u16,
                delay: rng.random_range(1..=MAX_DELAY_MS),
                weight: if excitatory { INITIAL_EXCITATORY_WEIGHT } else { INHIBITORY_WEIGHT },
            });
        }
    }
    SpikingNetwork::assemble(seed, kernel_pair, kernels, synapses)
}

/// On-disk shape of a network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub version: u32,
    pub seed: u64,
    pub kernel_pair: [KernelPreset; 2],
    pub neurons: Vec<NeuronKernel>,
    pub synapses: Vec<Synapse>,
}

impl From<SpikingNetwork> for NetworkRecord {
    fn from(net: SpikingNetwork) -> Self {
        NetworkRecord {
            version: FORMAT_VERSION,
            seed: net.seed,
            kernel_pair: [net.kernel_pair.excitatory, net.kernel_pair.inhibitory],
            neurons: net.kernels,
            synapses: net.synapses,
        }
    }
}

impl TryFrom<NetworkRecord> for SpikingNetwork {
    type Error = Error;

    fn try_from(rec: NetworkRecord) -> Result<Self> {
        if rec.version != FORMAT_VERSION {
            return Err(Error::data(format!("unsupported network format version {}", rec.version)));
        }
        let pair = KernelPair { excitatory: rec.kernel_pair[0], inhibitory: rec.kernel_pair[1] };
        SpikingNetwork::assemble(rec.seed, pair, rec.neurons, rec.synapses)
    }
}
