#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod active;
pub mod config;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod numeric;
pub mod optim;
pub mod pooling;
pub mod predictive;
pub mod records;
pub mod rng;
pub mod supra_bayes;

pub use error::{Error, Result};
