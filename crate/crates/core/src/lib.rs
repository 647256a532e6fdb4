//! Finite-blocklength error bounds for discrete memoryless channels with
//! input cost constraints, computed by the method of types.

#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod codesim;
pub mod selftest;
pub mod spectrum;
pub mod types;

pub use bounds::{
    achievability_upper_bound, converse_lower_bound, sweep, BoundEngine, BoundQuery, BoundResult,
    BoundsError, Grid, Variant,
};
pub use codesim::{
    estimate_error, exact_error, generate_codebook, Codebook, CodesimError, Decoder, DecoderSpec,
    DecodingRegions, SimResult,
};
pub use capacity::{capacity, Capacity};
pub use channel::{
    divergence, divergence_cond, functionals, mutual_info, output_distribution, Channel, ChannelError,
    ConditionalDistribution, Distribution, Functionals,
};
pub use spectrum::{build_spectrum, tail_prob, Comparison, Functional, Spectrum, SpectrumAtom};
pub use types::{
    enumerate_conditional_types, enumerate_input_types, eta, kappa, nu, ConditionalType,
    InputType, LogCount,
};
