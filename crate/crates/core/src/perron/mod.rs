//! Barrier construction/verification and the maximal-solution engine.

mod barriers;
mod solve;

pub use barriers::{
    build_closed_barriers, build_plateau_barriers, is_sub_solution, BarrierPair, BarrierVariant,
    ComparisonVerdict,
};
pub use solve::{
    lift, perron_solve, perron_solve_with, PerronRecord, PerronState, SolveMode, SweepConfig,
};
