//! Supersample and neighbouring-hypothesis laboratory for information-theoretic
//! generalization bounds of stable algorithms.
//!
//! Everything is computed on finite data distributions, either exactly by
//! enumeration or by seeded Monte Carlo.

// `!(x >= 0.0)` rejects NaN on purpose; index loops walk parallel arrays
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithms;
pub mod bounds;
pub mod error;
pub mod experiments;
pub mod information;
pub mod numeric;
pub mod problem;
pub mod stability;

pub use error::{Error, Result};
