//! Discrete IRS phase optimisation.

pub mod bcd;
pub mod ce;
pub mod codebook;
pub mod hybrid;
pub mod vt;

pub use codebook::{PhaseCodebook, PhaseConfig};
