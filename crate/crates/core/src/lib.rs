//! Exact finite-sample distributions, similar-test criteria and simulation
//! tools for the two-sample location problem with unequal variances.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criterion;
pub mod design;
pub mod distributions;
pub mod error;
pub mod fisher_behrens;
pub mod ideal;
pub mod io;
pub mod kernel;
pub mod linnik;
pub mod power;
pub mod quadrature;
pub mod roots;
pub mod simulation;

pub use criterion::{Constant, Criterion, CriterionTable, Family, LatticeKind};
pub use design::{Design, SampleSize, StatPoint, VariancePoint};
pub use distributions::Dof;
pub use error::{Error, Result};
