//! Core library for locating marginally outer trapped surfaces (MOTS) in
//! initial data sets `(M, g, p)`.
//!
//! The construction solves the capillarity-regularized graph equation
//! `mc(u) + tr(p)(u) = t·u` for a decreasing sequence of regularization
//! parameters `t`, starting each solve from one-sided barriers built out of
//! boundary trapping margins, and extracts the surface along which the
//! solutions diverge as `t` shrinks. Almost-minimizing perimeter checks give
//! an independent, derivative-free certificate for the extracted surface.
//!
//! Module map:
//! - [`geometry`]: grids, masked domains, metric/tensor fields, graph
//!   quantities of `u`, finite-difference residuals, surface meshes and the
//!   discrete MOTS residual.
//! - [`datasets`]: concrete initial-data families, trapping-margin analysis,
//!   and the collar constants `chi`/`delta`.
//! - [`elliptic`]: Dirichlet solves on node subsets (damped Newton with an
//!   analytic Jacobian), safe ball radii, and ball covers.
//! - [`perron`]: one-sided barriers, sub/super-solution verification, and the
//!   monotone lift iteration that produces the maximal bounded solution.
//! - [`blowup`]: the `t`-schedule, warm-started continuation, region
//!   classification, interface extraction, and interface verification.
//! - [`gmt`]: discrete perimeter, connected-flip almost-minimizing tests,
//!   graph mass bounds, and the cylinder descent check.

pub mod blowup;
pub mod datasets;
pub mod elliptic;
pub mod geometry;
pub mod gmt;
pub mod perron;

mod error;
pub use error::{Error, Result};
