//! The deterministic Fukui-Ishibashi traffic cellular automaton and its exact
//! finite-time theory.
//!
//! Cars on a ring advance `min(gap, m)` sites per synchronous step. Starting
//! from a random configuration of density ρ, the flow at time `t` equals
//! `1 - ρ - P_t(0^(m+1))`, and the block probability is a sum over
//! m-admissible preimages that reduces to ballot-type lattice path counts.
//!
//! Modules:
//!
//! - [`lattice`]: configurations, the car and site-local updates, open-boundary evolution
//! - [`measure`]: velocity histograms, flow, cyclic block frequencies
//! - [`preimage`]: admissibility, brute-force preimage oracle, path counts
//! - [`analytic`]: closed-form block probability and flow, steady state, large-`t` approximation
//! - [`simulate`]: seeded multi-replica runs
//! - [`verify`]: the cross-check suite

pub mod analytic;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod measure;
mod numeric;
pub mod preimage;
pub mod simulate;
pub mod verify;

pub use analytic::{
    approx_block_prob_large_t, exact_block_prob, exact_block_prob_rational, exact_flow,
    exact_flow_rational, flow_hypergeometric, fundamental_diagram, fundamental_diagram_exact,
    steady_state_block_prob, steady_state_flow, AnalyticPoint, AnalyticSeries, Horizon,
    NumericMode,
};
pub use error::{Error, Result};
pub use lattice::{
    init_bernoulli, init_fixed_count, iterate_open, step, step_local, BinaryString, Configuration,
    ModelParams,
};
pub use measure::{
    block_frequency, flow, mean_velocity, velocity_histogram, FlowSample, VelocityHistogram,
};
pub use num_rational::BigRational;
pub use preimage::{
    count_admissible, enumerate_preimages_bruteforce, is_admissible, path_count,
    preimage_probability, preimage_probability_exact, PreimageCount,
};
pub use simulate::{Ensemble, InitialCondition, SimulationSpec};

pub use numeric::CompensatedSum;

/// Crate version, embedded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
