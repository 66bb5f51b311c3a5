//! Fast solvers for the two-dimensional Lippmann-Schwinger equation.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod blocks;
pub mod cli;
pub mod dense;
pub mod discretization;
pub mod error;
pub mod fast_apply;
pub mod hbs;
pub mod io;
pub mod krylov;
pub mod lowrank;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
