use serde::Serialize;

use crate::channel::{dot, C64};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub snr: Vec<f64>,
    pub rate: Vec<f64>,
    pub sum_rate: f64,
}

/// `SNR = |h w|^2 / z_hat`, `R = log2(1 + SNR)` for each row.
pub fn snr_and_rate(rows: &[Vec<C64>], w: &[C64], z_hat: &[f64]) -> RateReport {
    let snr: Vec<f64> = rows
        .iter()
        .zip(z_hat)
        .map(|(h, z)| dot(h, w).norm_sqr() / z)
        .collect();
    let rate: Vec<f64> = snr.iter().map(|s| (1.0 + s).log2()).collect();
    let sum_rate = rate.iter().sum();
    RateReport { snr, rate, sum_rate }
}
