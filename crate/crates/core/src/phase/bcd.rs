//! Block coordinate ascent: one element at a time, every codebook phase tried.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::phase::{PhaseCodebook, PhaseConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcdOptions {
    /// Repeat sweeps until a full sweep changes nothing.
    pub until_stable: bool,
    pub max_sweeps: usize,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            until_stable: false,
            max_sweeps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcdTraceRow {
    pub iter: usize,
    pub element: usize,
    pub objective: f64,
    pub best_so_far: f64,
}

#[derive(Clone, Debug)]
pub struct BcdResult {
    pub config: PhaseConfig,
    pub value: f64,
    pub evaluations: usize,
    pub sweeps: usize,
    /// One row per element update.
    pub trace: Vec<BcdTraceRow>,
}

fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

pub fn bcd_optimize<F>(objective: F, cb: &PhaseCodebook, init: PhaseConfig, opts: &BcdOptions) -> BcdResult
where
    F: Fn(&PhaseConfig) -> f64 + Sync,
{
    let m = init.len();
    let q = cb.size();
    let mut cfg = init;
    let mut value = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut step = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for e in 0..m {
            let vals: Vec<f64> = (0..q)
                .into_par_iter()
                .map(|i| {
                    let mut c = cfg.clone();
                    c.indices[e] = i;
                    key(objective(&c))
                })
                .collect();
            evaluations += q;
            let mut best = 0;
            for i in 1..q {
                if vals[i] > vals[best] {
                    best = i;
                }
            }
            if cfg.indices[e] != best {
                changed |= vals[best] > vals[cfg.indices[e]];
                cfg.indices[e] = best;
            }
            value = vals[cfg.indices[e]];
            step += 1;
            trace.push(BcdTraceRow {
                iter: step,
                element: e,
                objective: value,
                best_so_far: value,
            });
        }
        if !opts.until_stable || !changed || sweeps >= opts.max_sweeps {
            break;
        }
    }
    BcdResult {
        config: cfg,
        value,
        evaluations,
        sweeps,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_accounting() {
        let cb = PhaseCodebook::new(2).unwrap();
        let target = [3usize, 1, 0, 2];
        let f = |c: &PhaseConfig| -> f64 {
            c.indices.iter().zip(&target).map(|(a, b)| if a == b { 1.0 } else { 0.0 }).sum()
        };
        let r = bcd_optimize(f, &cb, PhaseConfig::zeros(4), &BcdOptions::default());
        assert_eq!(r.config.indices, target.to_vec());
        assert_eq!(r.evaluations, 4 * 4);
        assert!(r.trace.windows(2).all(|w| w[1].objective >= w[0].objective));
    }
}
