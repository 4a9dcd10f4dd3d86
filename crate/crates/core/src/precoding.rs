//! Constructive-interference margin and the minimum-power symbol-level precoder.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{dot, norm_sq, C64};
use crate::error::{domain, Error, Result};

/// Singular-value ratio below which the constraint matrix counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// PSK constellation: symbol slot `b` carries phase `(2b+1)pi/B` to every user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstellationSpec {
    pub order: usize,
    pub eve_amplitude: f64,
    /// Eavesdropper phase per symbol slot.
    pub eve_phases: Vec<f64>,
}

impl ConstellationSpec {
    pub fn new(order: usize, eve_amplitude: f64, eve_phases: Vec<f64>) -> Result<Self> {
        if order < 2 {
            return domain(format!("PSK order must be at least 2, got {order}"));
        }
        if eve_phases.len() != order {
            return domain("one eavesdropper phase per symbol is required");
        }
        if !(eve_amplitude >= 0.0) {
            return domain("eavesdropper amplitude must be non-negative");
        }
        Ok(Self {
            order,
            eve_amplitude,
            eve_phases,
        })
    }

    pub fn varpi(&self) -> f64 {
        PI / self.order as f64
    }

    pub fn user_phase(&self, b: usize) -> f64 {
        (2 * b + 1) as f64 * PI / self.order as f64
    }

    pub fn eve_target(&self, b: usize) -> C64 {
        C64::from_polar(self.eve_amplitude, self.eve_phases[b])
    }

    /// Target vector: user amplitudes on the symbol phase, then the eavesdropper target.
    pub fn targets(&self, b: usize, amplitudes: &[f64]) -> Vec<C64> {
        let ph = self.user_phase(b);
        amplitudes
            .iter()
            .map(|&a| C64::from_polar(a, ph))
            .chain(std::iter::once(self.eve_target(b)))
            .collect()
    }
}

/// `Phi^{-1}(1 - gamma) sqrt((1 + tan^2 varpi) z)`.
pub fn ci_margin(gamma: f64, varpi: f64, z: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("detection threshold must lie in (0, 1), got {gamma}"));
    }
    if !(z > 0.0) {
        return domain(format!("noise bound must be positive, got {z}"));
    }
    let q = Normal::standard().inverse_cdf(1.0 - gamma);
    let t = varpi.tan();
    Ok(q * ((1.0 + t * t) * z).sqrt())
}

/// `r_min + Delta_k / tan(varpi)`.
pub fn user_min_amplitude(r_min: f64, gamma: f64, varpi: f64, z: f64) -> Result<f64> {
    Ok(r_min + ci_margin(gamma, varpi, z)? / varpi.tan())
}

/// Least-norm solver for `A w = c` with `A` stacked from channel rows.
#[derive(Clone, Debug)]
pub struct MinNormSolver {
    pinv: DMatrix<C64>,
    pub singular_values: Vec<f64>,
}

impl MinNormSolver {
    pub fn new(rows: &[Vec<C64>]) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return domain("no constraints");
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return domain("constraint rows have unequal length");
        }
        if p > n {
            return domain(format!("{p} constraints exceed {n} degrees of freedom"));
        }
        let a = DMatrix::from_fn(p, n, |i, j| rows[i][j]);
        let svd = a.svd(true, true);
        let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        let largest = sv.iter().cloned().fold(0.0, f64::max);
        let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(largest > 0.0) || smallest < RANK_TOL * largest {
            return Err(Error::Singular {
                smallest,
                largest,
                ratio: if largest > 0.0 { smallest / largest } else { 0.0 },
            });
        }
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let inv = DMatrix::from_diagonal(&DVector::from_iterator(
            sv.len(),
            sv.iter().map(|s| C64::new(1.0 / s, 0.0)),
        ));
        let pinv = v_t.adjoint() * inv * u.adjoint();
        Ok(Self {
            pinv,
            singular_values: sv,
        })
    }

    pub fn solve(&self, targets: &[C64]) -> Vec<C64> {
        assert_eq!(targets.len(), self.pinv.ncols(), "target length must equal constraint count");
        let c = DVector::from_column_slice(targets);
        (&self.pinv * c).iter().copied().collect()
    }
}

/// Minimum-norm weight meeting every row constraint `h_g w = target_g` exactly.
pub fn min_power_weights(rows: &[Vec<C64>], targets: &[C64]) -> Result<Vec<C64>> {
    Ok(MinNormSolver::new(rows)?.solve(targets))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecoderState {
    pub w: Vec<C64>,
    pub t_hat: Vec<f64>,
    pub eve_amplitude: f64,
}

impl PrecoderState {
    pub fn power(&self) -> f64 {
        norm_sq(&self.w)
    }
}

/// Rescale so that `||w||^2 = p_max`; amplitudes follow the same factor.
pub fn scale_to_power(state: &PrecoderState, p_max: f64) -> Result<PrecoderState> {
    let p = state.power();
    if !(p > 0.0) {
        return domain("cannot rescale a zero weight vector");
    }
    if !(p_max > 0.0) {
        return domain("P_max must be positive");
    }
    let f = (p_max / p).sqrt();
    Ok(PrecoderState {
        w: state.w.iter().map(|x| x * f).collect(),
        t_hat: state.t_hat.iter().map(|t| t * f).collect(),
        eve_amplitude: state.eve_amplitude * f,
    })
}

pub fn received_symbol(h: &[C64], w: &[C64]) -> C64 {
    dot(h, w)
}
