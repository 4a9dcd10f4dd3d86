//! Cross-entropy search over per-element categorical phase distributions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::phase::{PhaseCodebook, PhaseConfig};

/// Column-stochastic `size x m` matrix stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMatrix {
    pub size: usize,
    pub m: usize,
    p: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn uniform(size: usize, m: usize) -> Self {
        Self {
            size,
            m,
            p: vec![1.0 / size as f64; size * m],
        }
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let m = cols.len();
        if m == 0 {
            return domain("empty probability matrix");
        }
        let size = cols[0].len();
        let mut p = Vec::with_capacity(size * m);
        for c in cols {
            if c.len() != size {
                return domain("ragged probability columns");
            }
            let s: f64 = c.iter().sum();
            if (s - 1.0).abs() > 1e-12 || c.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return domain("column is not a probability vector");
            }
            p.extend_from_slice(c);
        }
        Ok(Self { size, m, p })
    }

    pub fn column(&self, m: usize) -> &[f64] {
        &self.p[m * self.size..(m + 1) * self.size]
    }

    pub fn get(&self, m: usize, i: usize) -> f64 {
        self.p[m * self.size + i]
    }

    pub fn max_abs_diff(&self, o: &ProbabilityMatrix) -> f64 {
        self.p.iter().zip(&o.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `alpha * self + (1 - alpha) * prev`.
    pub fn mix(&self, prev: &ProbabilityMatrix, alpha: f64) -> Self {
        Self {
            size: self.size,
            m: self.m,
            p: self.p.iter().zip(&prev.p).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect(),
        }
    }

    /// Mean log-likelihood of `samples` under this matrix (`-inf` on zero-probability draws).
    pub fn log_likelihood(&self, samples: &[PhaseConfig]) -> f64 {
        let mut s = 0.0;
        for cfg in samples {
            for (m, &i) in cfg.indices.iter().enumerate() {
                s += self.get(m, i).ln();
            }
        }
        s / samples.len() as f64
    }
}

pub fn ce_sample<R: Rng + ?Sized>(p: &ProbabilityMatrix, count: usize, rng: &mut R) -> Vec<PhaseConfig> {
    (0..count)
        .map(|_| {
            let indices = (0..p.m)
                .map(|m| {
                    let col = p.column(m);
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (i, &x) in col.iter().enumerate() {
                        acc += x;
                        if u < acc {
                            return i;
                        }
                    }
                    // rounding: fall back to the last entry with mass
                    col.iter().rposition(|&x| x > 0.0).unwrap_or(0)
                })
                .collect();
            PhaseConfig { indices }
        })
        .collect()
}

/// Maximum-likelihood categorical fit: per-element elite frequencies.
pub fn ce_update(elites: &[PhaseConfig], size: usize) -> Result<ProbabilityMatrix> {
    if elites.is_empty() {
        return domain("elite set is empty");
    }
    let m = elites[0].len();
    let mut p = vec![0.0; size * m];
    let inc = 1.0 / elites.len() as f64;
    for e in elites {
        if e.len() != m {
            return domain("elite configurations differ in length");
        }
        for (j, &i) in e.indices.iter().enumerate() {
            if i >= size {
                return domain(format!("codebook index {i} out of range"));
            }
            p[j * size + i] += inc;
        }
    }
    Ok(ProbabilityMatrix { size, m, p })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeOptions {
    pub samples: usize,
    pub elites: usize,
    pub max_iter: usize,
    /// Weight on the new fit; `None` disables smoothing.
    pub smoothing: Option<f64>,
    pub tol: f64,
}

impl Default for CeOptions {
    fn default() -> Self {
        Self {
            samples: 50,
            elites: 10,
            max_iter: 60,
            smoothing: Some(0.9),
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerTraceRow {
    pub iter: usize,
    pub objective: f64,
    pub best_so_far: f64,
}

#[derive(Clone, Debug)]
pub struct CeResult {
    pub best: PhaseConfig,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub trace: Vec<OptimizerTraceRow>,
}

fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

pub fn ce_optimize<F, R>(objective: F, cb: &PhaseCodebook, m: usize, opts: &CeOptions, rng: &mut R) -> Result<CeResult>
where
    F: Fn(&PhaseConfig) -> f64 + Sync,
    R: Rng + ?Sized,
{
    if opts.elites == 0 || opts.elites > opts.samples {
        return domain(format!("need 1 <= X_e <= X, got X_e = {}, X = {}", opts.elites, opts.samples));
    }
    if opts.max_iter < 3 {
        return domain("at least three iterations are required");
    }
    let size = cb.size();
    let mut p = ProbabilityMatrix::uniform(size, m);
    let mut history: Vec<ProbabilityMatrix> = vec![p.clone()];
    let mut best = PhaseConfig::zeros(m);
    let mut best_value = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut converged = false;
    let mut iterations = 0;
    for i in 1..=opts.max_iter {
        iterations = i;
        let samples = ce_sample(&p, opts.samples, rng);
        let values: Vec<f64> = samples.par_iter().map(|s| key(objective(s))).collect();
        evaluations += samples.len();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let top = order[0];
        if values[top] > best_value || best_value == f64::NEG_INFINITY && i == 1 {
            best_value = values[top];
            best = samples[top].clone();
        }
        trace.push(OptimizerTraceRow {
            iter: i,
            objective: values[top],
            best_so_far: best_value,
        });
        let elites: Vec<PhaseConfig> = order[..opts.elites].iter().map(|&j| samples[j].clone()).collect();
        let mle = ce_update(&elites, size)?;
        p = match opts.smoothing {
            Some(a) => mle.mix(&p, a),
            None => mle,
        };
        history.push(p.clone());
        let h = history.len();
        if h >= 3 && history[h - 1].max_abs_diff(&history[h - 2]) <= opts.tol && history[h - 2].max_abs_diff(&history[h - 3]) <= opts.tol {
            converged = true;
            break;
        }
        if h > 3 {
            history.remove(0);
        }
    }
    Ok(CeResult {
        best,
        best_value,
        iterations,
        converged,
        evaluations,
        trace,
    })
}
