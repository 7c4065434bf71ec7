//! Per-stream SNR estimation for maximum-likelihood decoded spatial
//! multiplexing.
//!
//! ML detection leaves no closed-form post-processing SNR, so this crate
//! estimates it from the per-stream error probability: an exact union
//! bound, a full sum of pairwise exponentials over unified error-vector
//! sets, and a max-log shortcut that reuses the ML decoder itself (one
//! zero-input search per stream over a small abbreviated set). Reference
//! metrics (capacity-based joint SNR, ZF post-processing SNR, minimum
//! distance bounds) and a Monte Carlo link-level harness that measures the
//! estimation error of every method round out the library.
//!
//! The `mlsnr` binary drives the harness (`simulate`), evaluates one
//! channel matrix (`estimate`) and dumps the error-vector sets (`sets`).

pub mod channel;
pub mod cli;
pub mod decoders;
pub mod error;
pub mod errorsets;
pub mod estimators;
pub mod harness;
pub mod modulation;
pub mod numerics;

pub use channel::{rayleigh_channel, transmit, ChannelRealization};
pub use decoders::{ml_decode, ml_search, zf_decode, zf_ppsnr, MlDecoder, SearchResult};
pub use error::{Error, Result};
pub use errorsets::ErrorSetFamily;
pub use estimators::{
    capacity_snr, capacity_snr_estimate, dmin_exact, evaluate, fullsum_perr, maxlog_perr,
    per_stream_snr, ph_error_bound, union_bound_perr, Method, PhBound, SnrEstimate,
};
pub use harness::{
    aggregate, empiric_snr, run_experiment, run_trial, ErrorStats, SimConfig, TrialRecord,
};
pub use modulation::{make_constellation, Constellation, ModulationKind};
pub use numerics::{
    log_det_capacity, pseudo_inverse, q_function, singular_values, ComplexMat, ComplexVec,
};
