use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use rand::Rng;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::channel::{complex_normal, dot, effective_noise_variance, LosChannelSet, C64};
use crate::error::{domain, Result};

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `1/4 sum_i Q(L_i^2 sin(alpha_i) / (N0/2))`, evaluated as written.
pub fn ber_analytic(l: &[f64], alpha: &[f64], n0: f64) -> Result<f64> {
    if !(n0 > 0.0) {
        return domain(format!("N0 must be positive, got {n0}"));
    }
    if l.len() != alpha.len() || l.is_empty() {
        return domain("amplitude and angle lists must be non-empty and equally long");
    }
    if alpha.iter().any(|a| !(*a > 0.0 && *a <= FRAC_PI_2)) {
        return domain("decision angles must lie in (0, pi/2]");
    }
    let s: f64 = l.iter().zip(alpha).map(|(li, ai)| q_function(li * li * ai.sin() / (n0 / 2.0))).sum();
    Ok(s / l.len() as f64)
}

/// Standard Gray-coded QPSK bit error rate `Q(sqrt(2 Eb/N0))` at per-symbol SNR `snr`.
pub fn qpsk_reference(snr: f64) -> f64 {
    q_function(snr.max(0.0).sqrt())
}

/// Smallest angle between a received point and the I/Q axes.
pub fn axis_angle(z: C64) -> f64 {
    let a = z.arg().rem_euclid(FRAC_PI_2);
    a.min(FRAC_PI_2 - a)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn bits_per_symbol(order: usize) -> Result<u32> {
    if order < 2 || !order.is_power_of_two() {
        return domain(format!("PSK order must be a power of two >= 2, got {order}"));
    }
    Ok(order.trailing_zeros())
}

/// Sector decision for PSK points at `(2b+1)pi/B`.
pub fn psk_decide(z: C64, order: usize) -> usize {
    let sector = 2.0 * PI / order as f64;
    ((z.arg().rem_euclid(2.0 * PI) / sector).floor() as usize) % order
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerEstimate {
    pub ber: f64,
    pub ci_halfwidth: f64,
    pub trials: usize,
    pub bit_errors: u64,
}

/// Monte Carlo BER for noiseless received points `points[b]` with complex noise variance
/// `noise_var[b]`, symbols drawn uniformly, Gray labels, sector decisions.
pub fn ber_from_points<R: Rng + ?Sized>(points: &[C64], noise_var: &[f64], trials: usize, rng: &mut R) -> Result<BerEstimate> {
    let order = points.len();
    let nb = bits_per_symbol(order)?;
    if noise_var.len() != order {
        return domain("one noise variance per symbol is required");
    }
    let mut errors = 0u64;
    for _ in 0..trials {
        let b = rng.random_range(0..order);
        let y = points[b] + complex_normal(rng) * noise_var[b].sqrt();
        let d = psk_decide(y, order);
        errors += (gray(b) ^ gray(d)).count_ones() as u64;
    }
    let total = (trials as u64 * nb as u64) as f64;
    let ber = errors as f64 / total;
    Ok(BerEstimate {
        ber,
        ci_halfwidth: 1.96 * (ber * (1.0 - ber) / total).sqrt(),
        trials,
        bit_errors: errors,
    })
}

/// Monte Carlo BER at receiver `g` for per-symbol weights `weights[b]`; the noise variance is the
/// effective NLoS-plus-thermal variance plus `n0`.
pub fn ber_monte_carlo<R: Rng + ?Sized>(
    set: &LosChannelSet,
    row: &[C64],
    g: usize,
    weights: &[Vec<C64>],
    n0: f64,
    trials: usize,
    rng: &mut R,
) -> Result<BerEstimate> {
    if trials < 10_000 {
        return domain(format!("at least 1e4 trials are required, got {trials}"));
    }
    if !(n0 >= 0.0) {
        return domain("N0 must be non-negative");
    }
    let points: Vec<C64> = weights.iter().map(|w| dot(row, w)).collect();
    let var: Vec<f64> = weights.iter().map(|w| effective_noise_variance(set, w, g) + n0).collect();
    ber_from_points(&points, &var, trials, rng)
}
