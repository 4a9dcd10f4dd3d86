//! Vector-trajectory phase selection: rotate every reflected component towards the symbol.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{LosChannelSet, C64};
use crate::phase::{PhaseCodebook, PhaseConfig};

/// Reflected components `tau_m = (G_bar w)_m h_bar_R,g,m` of one receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct VtTerms {
    pub tau: Vec<C64>,
}

pub fn vt_terms(set: &LosChannelSet, w: &[C64], g: usize) -> VtTerms {
    let gw = set.g_bar_w(w);
    let tau = gw.iter().zip(&set.receivers[g].h_r).map(|(a, h)| a * h).collect();
    VtTerms { tau }
}

/// Wrap to (-pi, pi].
pub fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

impl VtTerms {
    pub fn psi(&self, m: usize, phase: f64, theta: f64) -> f64 {
        wrap(phase + self.tau[m].arg() - theta)
    }

    /// `|tau_m| cos(psi_m)` for codebook entry `i`.
    pub fn gain(&self, m: usize, cb: &PhaseCodebook, i: usize, theta: f64) -> f64 {
        (self.tau[m] * cb.phasor(i) * C64::from_polar(1.0, -theta)).re
    }

    /// `sum_m |tau_m| e^{j(phi_m + angle tau_m)}`.
    pub fn reconstruct(&self, refl: &[C64]) -> C64 {
        self.tau.iter().zip(refl).map(|(t, p)| t * p).sum()
    }

    /// Projection of the cascade gain onto `e^{j theta}`.
    pub fn projection(&self, cfg: &PhaseConfig, cb: &PhaseCodebook, theta: f64) -> f64 {
        (self.reconstruct(&cfg.phasors(cb)) * C64::from_polar(1.0, -theta)).re
    }

    /// Codebook indices of element `m` ordered by priority (smallest `|psi|` first).
    pub fn priority(&self, m: usize, cb: &PhaseCodebook, theta: f64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..cb.size()).collect();
        let key: Vec<f64> = idx.iter().map(|&i| self.psi(m, cb.phase(i), theta).abs()).collect();
        idx.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
        idx
    }
}

pub fn vt_select_single(terms: &VtTerms, theta: f64, cb: &PhaseCodebook) -> PhaseConfig {
    let indices = (0..terms.tau.len()).map(|m| terms.priority(m, cb, theta)[0]).collect();
    PhaseConfig { indices }
}

/// `sum_m |tau_m| cos(2 pi / 2^(B+1))`.
pub fn worst_case_gain(terms: &VtTerms, cb: &PhaseCodebook) -> f64 {
    let c = (2.0 * PI / (1u64 << (cb.bits() + 1)) as f64).cos();
    terms.tau.iter().map(|t| t.norm()).sum::<f64>() * c
}

/// Per-user table: `table[rank][m]` is the codebook index with that priority at element `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorityMatrix {
    pub table: Vec<Vec<usize>>,
}

pub fn priority_matrix(terms: &VtTerms, theta: f64, cb: &PhaseCodebook) -> PriorityMatrix {
    let m = terms.tau.len();
    let mut table = vec![vec![0; m]; cb.size()];
    for e in 0..m {
        for (row, i) in table.iter_mut().zip(terms.priority(e, cb, theta)) {
            row[e] = i;
        }
    }
    PriorityMatrix { table }
}

/// Rule applied to elements whose users share no common priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VtFallback {
    /// Largest summed user projection.
    SumGain,
    /// Among phases with non-negative summed user projection, the smallest eavesdropper projection.
    EveDisturb,
}

/// Multi-user selection through per-user priority tables and same-rank intersection.
pub fn vt_select_multi(
    users: &[VtTerms],
    thetas: &[f64],
    cb: &PhaseCodebook,
    fallback: VtFallback,
    eve: Option<(&VtTerms, f64)>,
) -> PhaseConfig {
    assert_eq!(users.len(), thetas.len());
    let m = users[0].tau.len();
    let q = cb.size();
    let tables: Vec<PriorityMatrix> = users
        .iter()
        .zip(thetas)
        .map(|(t, &th)| priority_matrix(t, th, cb))
        .collect();
    let sum_gain = |e: usize, i: usize| -> f64 {
        users
            .iter()
            .zip(thetas)
            .map(|(t, &th)| t.gain(e, cb, i, th))
            .sum()
    };
    let argmax_sum = |e: usize| -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for i in 0..q {
            let v = sum_gain(e, i);
            if v > val {
                val = v;
                best = i;
            }
        }
        best
    };
    let mut indices = Vec::with_capacity(m);
    for e in 0..m {
        // same-priority set, scanned from the highest common priority down
        let common = (0..q).find(|&r| {
            let i = tables[0].table[r][e];
            tables.iter().all(|t| t.table[r][e] == i) && sum_gain(e, i) >= 0.0
        });
        let pick = match common {
            Some(r) => tables[0].table[r][e],
            None => match (fallback, eve) {
                (VtFallback::EveDisturb, Some((et, eth))) => {
                    let mut best = None;
                    let mut val = f64::INFINITY;
                    for i in 0..q {
                        if sum_gain(e, i) < 0.0 {
                            continue;
                        }
                        let v = et.gain(e, cb, i, eth);
                        if v < val {
                            val = v;
                            best = Some(i);
                        }
                    }
                    best.unwrap_or_else(|| argmax_sum(e))
                }
                _ => argmax_sum(e),
            },
        };
        indices.push(pick);
    }
    PhaseConfig { indices }
}
