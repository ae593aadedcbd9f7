//! Exclusion and zero-range processes on `Λ_n` with a fixed particle number.

mod ensemble;
mod generators;
mod interaction;

pub use ensemble::{
    binomial, enumerate_exclusion, enumerate_exclusion_with_budget, enumerate_zero_range,
    enumerate_zero_range_with_budget, ExclusionEnsemble, ZeroRangeEnsemble, DEFAULT_STATE_BUDGET,
};
pub use generators::{
    build_exclusion_generator, build_zero_range_generator, exclusion_gap, moving_cost, moving_lemma_check,
    zero_range_bound_table, verify_aldous, zero_range_gap, AldousReport, MovingLemmaVerdict, ParticleRow, ZeroRangeTable,
    BALANCE_TOLERANCE,
};
pub use interaction::{classify, zero_range_measure, GrowthCase, InteractionKind, InteractionRate, ZeroRangeMeasure};
