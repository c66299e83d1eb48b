//! Sampling-based checks of stability properties for systems with
//! disturbances.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod kl;
pub mod lyapunov;
pub mod monotone;
pub mod props;
pub mod reach;
pub mod search;
pub mod set;
pub mod sim;
pub mod verdict;

pub use error::{Error, Result};
