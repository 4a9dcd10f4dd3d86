//! IRS-assisted UAV directional-modulation simulator.

// `!(x > 0.0)` rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod design;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod output;
pub mod phase;
pub mod pipeline;
pub mod position;
pub mod precoding;
pub mod sweep;
pub mod weights;

pub use error::{Error, Result};
