//! Best-subset regression toolkit.
//!
//! Finds provably optimal (or certified near-optimal) k-sparse least-squares
//! and least-absolute-deviation fits with a native branch-and-bound engine
//! over convex box-and-ℓ1 node relaxations. Discrete first-order methods
//! (iterative hard thresholding with and without line search) supply warm
//! starts and upper bounds; coherence analysis and convex-QP level-set bounds
//! supply the box parameters that make the mixed-integer formulation exact.
//!
//! Module map:
//!
//! - [`linalg`] — datasets, standardization, spectral constants, restricted
//!   least squares, and the projection / linear-minimization oracles.
//! - [`firstorder`] — projected-gradient solvers for `min g(β) : ‖β‖₀ ≤ k`.
//! - [`bounds`] — coherence, analytic, convex-QP and warm-start parameter
//!   bounds for the coefficient and fitted-value boxes.
//! - [`miqp`] — the branch-and-bound solver, k-sweeps, and bounding-box
//!   restricted solves.
//! - [`lad`] — smoothed least-absolute-deviation losses, continuation,
//!   LAD polishing, LAD-Lasso, and LAD subset selection.
//! - [`baselines`] — coordinate-descent Lasso, debiased Lasso, stepwise.
//! - [`bench`] — synthetic data generation and the train/validate protocol.
//! - [`io`] — CSV and binary dataset formats, JSON-lines solver traces.

pub mod baselines;
pub mod bench;
pub mod bounds;
mod error;
pub mod firstorder;
pub mod io;
pub mod lad;
pub mod linalg;
pub mod miqp;

pub use error::{Error, Result};
pub use linalg::{Dataset, FeasibleRegion, StandardizeMap};
