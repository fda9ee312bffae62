//! Izhikevich spiking network with conduction delays and STDP.

mod encoding;
mod network;
mod neuron;
mod sim;
mod stdp;
mod train;

pub use encoding::{
    map_levels, quantize, schedule_stimuli, LevelMap, QuantizedEvent, Quantizer, Stimulus, StimulusSchedule, DEFAULT_LEVELS,
    MAX_STIMULUS_ROWS, NEURONS_PER_LEVEL, STIMULUS_CURRENT,
};
pub use network::{
    build_network, KernelPair, SpikingNetwork, Synapse, INHIBITORY_WEIGHT, INITIAL_EXCITATORY_WEIGHT, MAX_DELAY_MS,
    N_EXCITATORY, N_INHIBITORY, N_TOTAL, SYNAPSES_PER_NEURON, W_MAX,
};
pub use neuron::{single_neuron_spikes, KernelPreset, NeuronClass, NeuronKernel, NeuronState, SPIKE_THRESHOLD};
pub use sim::{simulate, simulate_plastic, NetworkState, DEFAULT_SIM_MS};
pub use stdp::{stdp_delta, StdpConfig, StdpMode, A_MINUS, A_PLUS, TAU_MINUS, TAU_PLUS};
pub use train::{train_weights, TrainConfig, TrainingTrace};
