//! Elliptic solve layer: banded linear algebra, damped Newton iteration on
//! free node sets, and the ball covers used by the sweep solver.

mod balls;
mod banded;
mod newton;

pub use balls::{ball_cover, ball_nodes, radius_field, Ball, BallCover};
pub use banded::BandedMatrix;
pub use newton::{continuation_solve, newton_solve, SolveOptions, SolveReport};
