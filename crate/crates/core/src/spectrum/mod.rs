//! Reversible generators, spectral gaps and the walk gap sweep.

mod gap;
mod generator;
mod sweep;

pub use gap::{
    dense_spectrum, rayleigh_quotient, spectral_gap, upper_bound_test_function, GapOptions, Method, MethodChoice,
    SpectralReport,
};
pub use generator::{build_walk_generator, Generator, StateSpace};
pub use sweep::{gap_scaling_sweep, SweepRow, SweepSummary};
