//! Discrete-time simulator for LoRa-modulated type-based multiple access
//! (TBMA) over satellite links.
//!
//! The crate is organised bottom-up:
//!
//! * [`dctfm`] builds and detects the single-tone DCT-FSK waveform, the
//!   multi-tone variant, and the DCT approximation of a function table.
//! * [`chirp`] spreads the analytic tone with a linear chirp.
//! * [`channel`] evaluates satellite link budgets and adds AWGN.
//! * [`tbma`] superposes concurrent users over the air, recovers the empirical
//!   measure of their measurements and runs the grid-search ML estimator.
//! * [`baseline`] is the orthogonal TDMA benchmark.
//! * [`harness`] drives seeded Monte Carlo sweeps and emits CSV records.

pub mod baseline;
pub mod channel;
pub mod chirp;
pub mod dctfm;
pub mod error;
pub mod harness;
pub mod rng;
pub mod tbma;

pub use baseline::{resource_report, run_tdma_round, ResourceReport, Scheme, TdmaRound};
pub use channel::{
    apply_channel, free_space_path_loss, link_snr, scenario_preset, ChannelRealization, LinkBudget,
    PresetOptions, ScenarioKind, ScenarioPreset,
};
pub use chirp::{
    analytic_tone, despread, instantaneous_frequency, occupied_bandwidth, spread, ChirpParams,
};
pub use dctfm::{
    approximate_function, dct_forward, dct_inverse, demodulate, modulate_multitone,
    modulate_single_tone, reconstruct, symbol_error_probability, theoretical_mse, BasebandSignal,
    Detection, FunctionSpec, Measurement, Modem, ModulationConfig,
};
pub use error::{Error, Result};
pub use harness::{
    run_trial, sweep, Experiment, ExperimentConfig, Point, SweepOutput, SweepRecord,
};
pub use tbma::{
    discretize_gaussian, kl_divergence, ml_estimate, recover_empirical_measure,
    sample_measurements, superpose, EmpiricalMeasure, MlEstimate, ParameterModel,
};

/// Complex baseband sample type used throughout the crate.
pub type Complex = num_complex::Complex64;
