//! Penalty-method refinement of user amplitudes and weights at a fixed placement and phase.

use serde::{Deserialize, Serialize};

use crate::channel::{dot, norm_sq, C64};
use crate::error::{domain, Error, Result};
use crate::precoding::{ConstellationSpec, MinNormSolver};

/// `t = (1 + xi * 2 Re{hw e^{-j theta}}) / (2 xi)`.
pub fn update_amplitude(hw: C64, theta: f64, xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return domain(format!("penalty must be positive, got {xi}"));
    }
    let re = (hw * C64::from_polar(1.0, -theta)).re;
    Ok((1.0 + xi * 2.0 * re) / (2.0 * xi))
}

/// Largest penalty keeping the amplitude update above `r_min_k`; infinite when inactive.
pub fn penalty_upper_bound(hw: C64, theta: f64, r_min_k: f64) -> f64 {
    let re = (hw * C64::from_polar(1.0, -theta)).re;
    let den = 2.0 * r_min_k - 2.0 * re;
    if den <= 1e-9 * r_min_k.abs() || den <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / den
    }
}

/// Least-norm weights reproducing amplitudes `t_hat` on symbol `b`.
pub fn solve_weights_for_amplitudes(
    solver: &MinNormSolver,
    spec: &ConstellationSpec,
    b: usize,
    t_hat: &[f64],
) -> Vec<C64> {
    solver.solve(&spec.targets(b, t_hat))
}

/// Penalty used when every user bound is inactive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum XiFallback {
    /// `xi = 1`.
    Unit,
    /// `xi = 1 / (2 kappa mean(r_min_k))`, i.e. amplitudes grow by `kappa mean(r_min_k)` per step.
    Scaled { kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightOptions {
    pub max_iter: usize,
    pub fallback: XiFallback,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            fallback: XiFallback::Scaled { kappa: 0.1 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightTraceRow {
    pub iter: usize,
    pub xi: f64,
    pub sum_t: f64,
    pub w_norm_sq: f64,
}

#[derive(Clone, Debug)]
pub struct PenaltyState {
    pub xi: f64,
    pub t_hat: Vec<f64>,
    pub w: Vec<C64>,
    pub p_min: f64,
    pub trace: Vec<WeightTraceRow>,
}

/// Alternate the closed-form amplitude update and the least-norm weight solve until the
/// next iterate would exceed `p_max`.
#[allow(clippy::too_many_arguments)]
pub fn alternate_optimize(
    rows: &[Vec<C64>],
    solver: &MinNormSolver,
    spec: &ConstellationSpec,
    b: usize,
    r_min_k: &[f64],
    w0: &[C64],
    p_max: f64,
    opts: &WeightOptions,
) -> Result<PenaltyState> {
    let k = r_min_k.len();
    let p0 = norm_sq(w0);
    if p0 > p_max {
        return Err(Error::Infeasible {
            constraint: "initial weights exceed P_max".into(),
            p_min: p0,
            p_max,
        });
    }
    let theta = spec.user_phase(b);
    let mut t_hat = r_min_k.to_vec();
    let mut w = w0.to_vec();
    let mut xi = f64::NAN;
    let mut trace = vec![WeightTraceRow {
        iter: 0,
        xi: f64::NAN,
        sum_t: t_hat.iter().sum(),
        w_norm_sq: p0,
    }];
    for it in 1..=opts.max_iter {
        let hw: Vec<C64> = rows[..k].iter().map(|h| dot(h, &w)).collect();
        let bound = hw
            .iter()
            .zip(r_min_k)
            .map(|(&h, &r)| penalty_upper_bound(h, theta, r))
            .filter(|x| x.is_finite())
            .fold(f64::INFINITY, f64::min);
        let step_xi = if bound.is_finite() {
            0.9 * bound
        } else {
            match opts.fallback {
                XiFallback::Unit => 1.0,
                XiFallback::Scaled { kappa } => {
                    let mean = r_min_k.iter().sum::<f64>() / k as f64;
                    1.0 / (2.0 * kappa * mean)
                }
            }
        };
        let next_t = hw
            .iter()
            .zip(r_min_k)
            .map(|(&h, &r)| update_amplitude(h, theta, step_xi).map(|t| t.max(r)))
            .collect::<Result<Vec<_>>>()?;
        let next_w = solve_weights_for_amplitudes(solver, spec, b, &next_t);
        let p = norm_sq(&next_w);
        if p > p_max {
            break;
        }
        let prev_sum: f64 = t_hat.iter().sum();
        let sum: f64 = next_t.iter().sum();
        if sum < prev_sum {
            break;
        }
        t_hat = next_t;
        w = next_w;
        xi = step_xi;
        trace.push(WeightTraceRow {
            iter: it,
            xi,
            sum_t: sum,
            w_norm_sq: p,
        });
        if (sum - prev_sum).abs() < 1e-9 * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(PenaltyState {
        xi,
        p_min: norm_sq(&w),
        t_hat,
        w,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_update() {
        let a = 0.7;
        let th = 0.4;
        let hw = C64::from_polar(a, th);
        let t = update_amplitude(hw, th, 2.5).unwrap();
        assert!((t - (a + 1.0 / 5.0)).abs() < 1e-12);
        let t_inf = update_amplitude(hw, th, 1e12).unwrap();
        assert!((t_inf - a).abs() < 1e-9);
        assert!(update_amplitude(hw, th, 0.0).is_err());
    }

    #[test]
    fn bound_cases() {
        let r = 2.0;
        let hw = C64::from_polar(r - 0.5, 0.3);
        assert!((penalty_upper_bound(hw, 0.3, r) - 1.0).abs() < 1e-12);
        assert!(penalty_upper_bound(C64::from_polar(r, 0.3), 0.3, r).is_infinite());
        assert!(penalty_upper_bound(C64::from_polar(r + 1.0, 0.3), 0.3, r).is_infinite());
    }

    #[test]
    fn bound_round_trip() {
        let r = 1.3;
        let th = 1.1;
        let hw = C64::from_polar(0.8, th + 0.2);
        let xi = penalty_upper_bound(hw, th, r);
        let t = update_amplitude(hw, th, xi).unwrap();
        assert!((t - r).abs() < 1e-12);
    }
}
