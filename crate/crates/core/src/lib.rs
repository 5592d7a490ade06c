//! Pseudospectral and integrated solvers for porous medium flow driven by a
//! nonlocal pressure, with barrier constructions, self-similar profile maps
//! and diagnostics.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod integrated;
pub mod output;
pub(crate) mod parallel;
pub mod quadrature;
pub mod selfsimilar;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{make_grid, Field, FracOrder, Grid1D};
pub use solver::{simulate_m1, step_m1, ModelParams, Trajectory};
