#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fourier;
pub mod maps;
pub mod noise;
pub mod propagation;
mod quad;

pub use error::{Error, Result};
