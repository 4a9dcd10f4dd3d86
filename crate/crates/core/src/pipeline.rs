//! End-to-end runs: placement, weights, phase search, hybrid refinement, evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dot, effective_noise_variance, C64};
use crate::config::{rng_for, stream, RunConfig};
use crate::design::{solve_s1, DesignPoint, Evaluator};
use crate::error::{Error, Result};
use crate::eval::beammap::{beam_response_map, mw_to_dbm, BeamMap, Marker};
use crate::eval::ber::{axis_angle, ber_analytic, ber_monte_carlo, qpsk_reference};
use crate::eval::rate::RateReport;
use crate::geometry::Cartesian;
use crate::phase::bcd::bcd_optimize;
use crate::phase::ce::{ce_optimize, OptimizerTraceRow};
use crate::phase::hybrid::{hybrid_vt, vt_candidate, HybridMode};
use crate::phase::PhaseConfig;
use crate::position::{position_outer_loop, PositionTraceRow};
use crate::weights::WeightTraceRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vt,
    Ce,
    Bcd,
    CeVt,
    BcdVt,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Vt, Method::Ce, Method::Bcd, Method::CeVt, Method::BcdVt];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Vt => "vt",
            Method::Ce => "ce",
            Method::Bcd => "bcd",
            Method::CeVt => "ce-vt",
            Method::BcdVt => "bcd-vt",
        }
    }

    fn base(&self) -> Option<Method> {
        match self {
            Method::CeVt => Some(Method::Ce),
            Method::BcdVt => Some(Method::Bcd),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected vt, ce, bcd, ce-vt or bcd-vt)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridSummary {
    pub accepted: bool,
    pub base_objective: f64,
    pub base_sum_rate: f64,
    pub candidate_objective: f64,
    pub candidate_sum_rate: f64,
}

/// Output of one phase optimizer on a prepared evaluator.
#[derive(Clone, Debug)]
pub struct Optimized {
    pub method: Method,
    pub design: DesignPoint,
    pub trace: Vec<OptimizerTraceRow>,
    pub evaluations: usize,
    pub hybrid: Option<HybridSummary>,
    pub seconds: f64,
}

/// Evaluator at the seeded start position.
pub fn prepare(cfg: &RunConfig, seed: u64) -> Result<Evaluator> {
    let scene = cfg.initial_scene(seed)?;
    scene.validate()?;
    Ok(Evaluator::new(scene, cfg.design_params(seed)?, cfg.codebook()?))
}

fn run_base(eval: &Evaluator, cfg: &RunConfig, seed: u64, method: Method) -> Result<Optimized> {
    let t0 = Instant::now();
    let m = eval.m();
    let opt = &cfg.optimizer;
    let (design, trace, evaluations) = match method {
        Method::Vt => {
            let zero = PhaseConfig::zeros(m);
            let d0 = eval.evaluate(&zero, true)?;
            let c = &eval.params.constellation;
            let pick = vt_candidate(&d0, c.user_phase(0), c.eve_phases[0], &eval.codebook, opt.vt_fallback);
            let d = match opt.hybrid_mode {
                HybridMode::FixedWeights => eval.with_fixed_weights(&d0, &pick),
                HybridMode::EveRestored => eval.with_eve_restored(&d0, &pick)?,
                HybridMode::Reweight => eval.with_reweighting(&d0, &pick)?,
                HybridMode::Redesign => eval.evaluate(&pick, true)?,
            };
            let trace = vec![
                OptimizerTraceRow {
                    iter: 0,
                    objective: d0.objective,
                    best_so_far: d0.objective,
                },
                OptimizerTraceRow {
                    iter: 1,
                    objective: d.objective,
                    best_so_far: d.objective.max(d0.objective),
                },
            ];
            (d, trace, 2)
        }
        Method::Ce => {
            let mut rng = rng_for(seed, stream::CE);
            let r = ce_optimize(|c| eval.objective(c), &eval.codebook, m, &opt.ce, &mut rng)?;
            (eval.evaluate(&r.best, true)?, r.trace, r.evaluations)
        }
        Method::Bcd => {
            let r = bcd_optimize(|c| eval.objective(c), &eval.codebook, PhaseConfig::zeros(m), &opt.bcd);
            let trace = r
                .trace
                .iter()
                .map(|t| OptimizerTraceRow {
                    iter: t.iter,
                    objective: t.objective,
                    best_so_far: t.best_so_far,
                })
                .collect();
            (eval.evaluate(&r.config, true)?, trace, r.evaluations)
        }
        Method::CeVt | Method::BcdVt => unreachable!("hybrid methods refine a base run"),
    };
    Ok(Optimized {
        method,
        design,
        trace,
        evaluations,
        hybrid: None,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn refine(eval: &Evaluator, cfg: &RunConfig, base: &Optimized, method: Method) -> Result<Optimized> {
    let t0 = Instant::now();
    let h = hybrid_vt(eval, &base.design, cfg.optimizer.vt_fallback, cfg.optimizer.hybrid_mode)?;
    let mut trace = base.trace.clone();
    let best = trace.last().map_or(f64::NEG_INFINITY, |r| r.best_so_far);
    trace.push(OptimizerTraceRow {
        iter: trace.len() + 1,
        objective: h.candidate_objective,
        best_so_far: best.max(h.design.objective),
    });
    Ok(Optimized {
        method,
        hybrid: Some(HybridSummary {
            accepted: h.accepted,
            base_objective: base.design.objective,
            base_sum_rate: base.design.sum_rate(),
            candidate_objective: h.candidate_objective,
            candidate_sum_rate: h.candidate_sum_rate,
        }),
        design: h.design,
        trace,
        evaluations: base.evaluations + 1,
        seconds: base.seconds + t0.elapsed().as_secs_f64(),
    })
}

/// Runs every method in `methods`; hybrid methods reuse the matching base run.
pub fn optimize_methods(eval: &Evaluator, cfg: &RunConfig, seed: u64, methods: &[Method]) -> Vec<Result<Optimized>> {
    let mut bases: Vec<(Method, Result<Optimized>)> = Vec::new();
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let base_method = method.base().unwrap_or(method);
        if !bases.iter().any(|(m, _)| *m == base_method) {
            bases.push((base_method, run_base(eval, cfg, seed, base_method)));
        }
        let base = &bases.iter().find(|(m, _)| *m == base_method).expect("base run present").1;
        let r = match (base, method.base()) {
            (Ok(b), None) => Ok(b.clone()),
            (Ok(b), Some(_)) => refine(eval, cfg, b, method),
            (Err(e), _) => Err(Error::Domain(format!("{base_method} failed: {e}"))),
        };
        out.push(r);
    }
    out
}

pub fn optimize(eval: &Evaluator, cfg: &RunConfig, seed: u64, method: Method) -> Result<Optimized> {
    optimize_methods(eval, cfg, seed, &[method]).pop().expect("one result")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerRow {
    pub n0: f64,
    pub receiver: String,
    pub ber: f64,
    pub ci_halfwidth: f64,
    pub trials: usize,
    /// Closed-form value from received amplitudes and decision angles.
    pub analytic: Option<f64>,
    /// Gray QPSK reference at the mean per-symbol SNR.
    pub qpsk_reference: f64,
}

fn receiver_label(g: usize, k: usize) -> String {
    if g < k {
        format!("user{g}")
    } else {
        "eve".to_string()
    }
}

/// Monte Carlo and closed-form BER of every receiver at every `N0`.
pub fn ber_sweep(design: &DesignPoint, n0s: &[f64], trials: usize, seed: u64) -> Result<Vec<BerRow>> {
    let set = &design.channels;
    let k = set.k_users;
    let g_count = set.receivers.len();
    let weights: Vec<Vec<C64>> = design.symbols.iter().map(|s| s.state.w.clone()).collect();
    let jobs: Vec<(usize, usize)> = (0..n0s.len()).flat_map(|i| (0..g_count).map(move |g| (i, g))).collect();
    jobs.par_iter()
        .enumerate()
        .map(|(j, &(i, g))| {
            let n0 = n0s[i];
            let row = &design.rows[g];
            let mut rng = rng_for(seed, (stream::BER << 32) | j as u64);
            let est = ber_monte_carlo(set, row, g, &weights, n0, trials, &mut rng)?;
            let points: Vec<C64> = weights.iter().map(|w| dot(row, w)).collect();
            let l: Vec<f64> = points.iter().map(|p| p.norm()).collect();
            let a: Vec<f64> = points.iter().map(|p| axis_angle(*p)).collect();
            let analytic = ber_analytic(&l, &a, n0).ok();
            let snr = weights
                .iter()
                .zip(&points)
                .map(|(w, p)| p.norm_sqr() / (effective_noise_variance(set, w, g) + n0))
                .sum::<f64>()
                / weights.len() as f64;
            Ok(BerRow {
                n0,
                receiver: receiver_label(g, k),
                ber: est.ber,
                ci_halfwidth: est.ci_halfwidth,
                trials: est.trials,
                analytic,
                qpsk_reference: qpsk_reference(snr),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolWeights {
    pub b: usize,
    /// `[re, im]` per antenna.
    pub w: Vec<[f64; 2]>,
    pub t_hat: Vec<f64>,
    pub power_mw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub method: Method,
    pub seed: u64,
    pub position: Cartesian,
    pub feasible: bool,
    /// Why the design fell back to the unconstrained precoder, with the failing power.
    pub infeasibility: Option<String>,
    pub p_min_mw: f64,
    pub objective: f64,
    pub phase_config: PhaseConfig,
    pub weights: Vec<SymbolWeights>,
    pub rate: RateReport,
    pub hybrid: Option<HybridSummary>,
    pub evaluations: usize,
    pub markers: Vec<Marker>,
    pub ber: Vec<BerRow>,
    pub position_trace: Vec<PositionTraceRow>,
    pub weight_trace: Vec<WeightTraceRow>,
    pub optimizer_trace: Vec<OptimizerTraceRow>,
    #[serde(skip)]
    pub beammap: BeamMap,
    #[serde(skip)]
    pub design: DesignPoint,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

fn infeasibility(d: &DesignPoint, p_max: f64) -> Option<String> {
    (!d.feasible).then(|| {
        format!(
            "minimum-power precoder exceeds P_max (P_min = {:.6e} mW, P_max = {:.6e} mW)",
            d.p_min, p_max
        )
    })
}

/// Rate, beam map and BER of an optimized design.
pub fn assemble_report(eval: &Evaluator, cfg: &RunConfig, seed: u64, opt: Optimized, mut timings: Vec<StageTiming>) -> Result<RunReport> {
    let t0 = Instant::now();
    let d = &opt.design;
    let refl = d.refl(&eval.codebook);
    let beammap = beam_response_map(&d.channels, &refl, d.w0(), &cfg.evaluation.beammap, d.scene.ground_z())?;
    let ber = ber_sweep(d, &cfg.evaluation.n0, cfg.evaluation.ber_trials, seed)?;
    timings.push(StageTiming {
        stage: "optimize".into(),
        seconds: opt.seconds,
    });
    timings.push(StageTiming {
        stage: "evaluate".into(),
        seconds: t0.elapsed().as_secs_f64(),
    });
    let weights = d
        .symbols
        .iter()
        .map(|s| SymbolWeights {
            b: s.b,
            w: s.state.w.iter().map(|c| [c.re, c.im]).collect(),
            t_hat: s.state.t_hat.clone(),
            power_mw: s.state.power(),
        })
        .collect();
    Ok(RunReport {
        method: opt.method,
        seed,
        position: d.scene.uav,
        feasible: d.feasible,
        infeasibility: infeasibility(d, eval.params.p_max),
        p_min_mw: d.p_min,
        objective: d.objective,
        phase_config: d.config.clone(),
        weights,
        rate: d.rate(),
        hybrid: opt.hybrid.clone(),
        evaluations: opt.evaluations,
        markers: beammap.markers.clone(),
        ber,
        position_trace: d.position_trace.clone(),
        weight_trace: d.symbols[0].weight_trace.clone(),
        optimizer_trace: opt.trace.clone(),
        beammap,
        design: opt.design,
        timings,
    })
}

/// Full run of one method with the evaluation suite.
pub fn run_pipeline(cfg: &RunConfig, seed: u64, method: Method) -> Result<RunReport> {
    let t0 = Instant::now();
    let eval = prepare(cfg, seed)?;
    let setup = vec![StageTiming {
        stage: "setup".into(),
        seconds: t0.elapsed().as_secs_f64(),
    }];
    let opt = optimize(&eval, cfg, seed, method)?;
    assemble_report(&eval, cfg, seed, opt, setup)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinPowerRow {
    pub b: usize,
    pub p_min_mw: f64,
    pub p_min_dbm: f64,
    pub feasible: bool,
}

/// Minimum-power precoder of every symbol at the start position, all-zero configuration.
pub fn min_power(cfg: &RunConfig, seed: u64) -> Result<Vec<MinPowerRow>> {
    let eval = prepare(cfg, seed)?;
    let refl = PhaseConfig::zeros(eval.m()).phasors(&eval.codebook);
    (0..eval.params.constellation.order)
        .map(|b| {
            let s1 = solve_s1(&eval.scene, &eval.params, &refl, b)?;
            Ok(MinPowerRow {
                b,
                p_min_mw: s1.p_min,
                p_min_dbm: mw_to_dbm(s1.p_min),
                feasible: s1.p_min <= eval.params.p_max,
            })
        })
        .collect()
}

/// Placement loop for symbol 0 under the all-zero configuration.
pub fn position_run(cfg: &RunConfig, seed: u64) -> Result<Vec<PositionTraceRow>> {
    let eval = prepare(cfg, seed)?;
    let refl = PhaseConfig::zeros(eval.m()).phasors(&eval.codebook);
    Ok(position_outer_loop(&eval.scene, &eval.params, &refl, 0)?.trace)
}
