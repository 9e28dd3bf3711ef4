//! Linearized 2D Euler dynamics around strictly monotone shear flows in
//! periodic channels.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod initial;
pub mod oracle;
pub mod profiles;
pub mod registry;
pub mod report;
pub mod run;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid, C64};
