//! Return probabilities `P_t(0, x)` and the `ψ(t) = Σ_x f_t(x)²` functional.

mod analysis;
mod fourier;
mod montecarlo;
mod semigroup;

pub use analysis::*;
pub use fourier::{characteristic_exponent, return_probability_fourier};
pub use montecarlo::*;
pub use semigroup::*;
