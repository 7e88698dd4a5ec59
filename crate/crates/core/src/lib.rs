// `!(x > y)` is used deliberately so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod sardata;
pub mod simulator;

pub use error::{Error, Result};
