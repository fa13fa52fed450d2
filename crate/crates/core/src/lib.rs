#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Pathwise solutions of one-dimensional SDEs with singular drift,
//! `X_t = X_0 + ∫ b(s, X_s) ds + B_t`, solved against a fixed driver path.
//!
//! The crate covers Bessel-type drifts (two- and one-sided bridges, the
//! Bessel(3) drift), a drift without weak solutions, and two piecewise
//! drifts whose path-by-path solutions are built explicitly by gluing.

pub mod cli;
pub mod constructions;
pub mod drifts;
pub mod error;
pub mod paths;
pub mod solver;
pub mod verify;

pub use drifts::{eval_drift, singularity_locations, DriftSpec, Side, Singularities, TailSpec};
pub use error::{Error, Result};
pub use paths::{
    eval_path, make_uniform_grid, refine_bridge, sample_brownian, PathKind, RngSpec, SamplePath,
    TimeGrid,
};
pub use solver::{
    detect_hit, residual_sup, solve_pathwise, solve_until, BranchEntry, Hit, PinRecord, Residual,
    ResidualOptions, Segment, Sidecar, SolutionPath, SolveOptions, Start,
};
pub use constructions::{
    bes3_extension, bridge_solution, construct_ce1, construct_ce2, glue, BranchChoice, Ce1Branch,
    Ce2Variant,
};
