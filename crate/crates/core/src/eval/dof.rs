//! Numerical rank of the end-to-end LoS channels seen by a multi-antenna eavesdropper and
//! by the stacked users.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::{LosChannelSet, C64};
use crate::error::{domain, Result};
use crate::geometry::Cartesian;

pub const RANK_TOL: f64 = 1e-9;

/// Number of singular values above `RANK_TOL` times the largest.
pub fn numerical_rank(a: &DMatrix<C64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DofReport {
    pub eve_antennas: usize,
    pub eve_rank: usize,
    pub eve_cascade_rank: usize,
    pub eve_direct_rank: usize,
    pub user_rank: usize,
    pub user_cascade_rank: usize,
    pub k_users: usize,
    pub eve_bound_ok: bool,
    pub user_bound_ok: bool,
}

fn cascade_block(set: &LosChannelSet, h_r: &[Vec<C64>], scale: &[f64], refl: &[C64]) -> DMatrix<C64> {
    let n = set.n();
    DMatrix::from_fn(h_r.len(), n, |i, j| {
        let c: C64 = h_r[i].iter().zip(refl).zip(&set.irs_tx).map(|((h, p), g)| h * p * g).sum();
        c * scale[i] * set.h_ar[j]
    })
}

/// Ranks of `H_R,e Phi G_bar + H_A,e` for a horizontal `n_e`-element half-wave ULA centred on
/// the eavesdropper (IRS rows near-field per antenna, direct rows far-field) and of the user
/// stack `H_R,K Phi G_bar + H_A,K`.
pub fn dof_check(set: &LosChannelSet, refl: &[C64], n_e: usize) -> Result<DofReport> {
    if n_e == 0 {
        return domain("the eavesdropper needs at least one antenna");
    }
    if refl.len() != set.m() {
        return domain("reflection vector length must equal M");
    }
    let eve = &set.receivers[set.eve()];
    let wavelength = set.wavelength();
    let d = wavelength / 2.0;
    let centre = (n_e as f64 - 1.0) / 2.0;
    let ants: Vec<Cartesian> = (0..n_e)
        .map(|i| eve.position.add(&Cartesian::new(0.0, (i as f64 - centre) * d, 0.0)))
        .collect();
    let rx = ants
        .iter()
        .map(|p| set.virtual_receiver(*p))
        .collect::<Result<Vec<_>>>()?;
    let h_r: Vec<Vec<C64>> = rx.iter().map(|r| r.h_r.clone()).collect();
    let scale: Vec<f64> = rx.iter().map(|r| r.loss.zeta[0] * r.loss.upsilon[0]).collect();
    let cascade = cascade_block(set, &h_r, &scale, refl);

    // far-field: common direct-path steering across the Eve array
    let dir = eve.position.sub(&set.uav_position());
    let u = dir.y / dir.norm();
    let z3 = eve.loss.zeta[2];
    let direct = DMatrix::from_fn(n_e, set.n(), |i, j| {
        let ph = -2.0 * PI / wavelength * u * (i as f64 - centre) * d;
        C64::from_polar(z3, ph) * eve.h_a[j]
    });
    let total = &cascade + &direct;

    let k = set.k_users;
    let users = &set.receivers[..k];
    let uh: Vec<Vec<C64>> = users.iter().map(|r| r.h_r.clone()).collect();
    let us: Vec<f64> = users.iter().map(|r| r.loss.zeta[0] * r.loss.upsilon[0]).collect();
    let ucascade = cascade_block(set, &uh, &us, refl);
    let udirect = DMatrix::from_fn(k, set.n(), |i, j| users[i].h_a[j] * users[i].loss.zeta[2]);
    let ustack = &ucascade + &udirect;

    let eve_rank = numerical_rank(&total);
    let user_rank = numerical_rank(&ustack);
    Ok(DofReport {
        eve_antennas: n_e,
        eve_rank,
        eve_cascade_rank: numerical_rank(&cascade),
        eve_direct_rank: numerical_rank(&direct),
        user_rank,
        user_cascade_rank: numerical_rank(&ucascade),
        k_users: k,
        eve_bound_ok: eve_rank <= 2,
        user_bound_ok: user_rank <= 1 + k,
    })
}
