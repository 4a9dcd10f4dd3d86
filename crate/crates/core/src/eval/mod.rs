//! Rate, BER, degree-of-freedom and beam-response evaluation.

pub mod beammap;
pub mod ber;
pub mod dof;
pub mod rate;
