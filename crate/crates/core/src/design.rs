//! Joint design of placement and weights for a given IRS configuration.

use serde::{Deserialize, Serialize};

use crate::channel::{aggregate_los_channel, dot, los_channels, noise_variance_upper_bound, ChannelParams, LosChannelSet, C64};
use crate::error::{Error, Result};
use crate::eval::rate::{snr_and_rate, RateReport};
use crate::geometry::Scene;
use crate::phase::{PhaseCodebook, PhaseConfig};
use crate::position::{position_outer_loop, PositionOptions, PositionTraceRow};
use crate::precoding::{scale_to_power, user_min_amplitude, ConstellationSpec, MinNormSolver, PrecoderState};
use crate::weights::{alternate_optimize, WeightOptions, WeightTraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveSymbols {
    /// Sum of user amplitudes of symbol 0.
    First,
    /// Mean over all symbols of the summed user amplitudes.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub channel: ChannelParams,
    pub constellation: ConstellationSpec,
    /// Minimum user amplitude in sqrt(mW).
    pub r_min: f64,
    pub gamma: f64,
    /// Transmit budget in mW.
    pub p_max: f64,
    pub position: PositionOptions,
    pub weights: WeightOptions,
    pub refine_weights: bool,
    pub objective_symbols: ObjectiveSymbols,
}

/// Minimum-power precoder of one symbol at a fixed placement and configuration.
#[derive(Clone, Debug)]
pub struct S1Solution {
    pub channels: LosChannelSet,
    /// Aggregated LoS rows, users then the eavesdropper.
    pub rows: Vec<Vec<C64>>,
    pub solver: MinNormSolver,
    /// Noise bound per receiver (users then eavesdropper).
    pub z_hat: Vec<f64>,
    pub r_min_k: Vec<f64>,
    pub w: Vec<C64>,
    pub p_min: f64,
}

pub fn solve_s1(scene: &Scene, params: &DesignParams, refl: &[C64], b: usize) -> Result<S1Solution> {
    let channels = los_channels(scene, &params.channel)?;
    let g_count = channels.receivers.len();
    let rows: Vec<Vec<C64>> = (0..g_count).map(|g| aggregate_los_channel(&channels, refl, g)).collect();
    let z_hat = (0..g_count)
        .map(|g| noise_variance_upper_bound(&channels, params.p_max, g))
        .collect::<Result<Vec<_>>>()?;
    let varpi = params.constellation.varpi();
    let r_min_k = z_hat[..channels.k_users]
        .iter()
        .map(|&z| user_min_amplitude(params.r_min, params.gamma, varpi, z))
        .collect::<Result<Vec<_>>>()?;
    let solver = MinNormSolver::new(&rows)?;
    let w = solver.solve(&params.constellation.targets(b, &r_min_k));
    let p_min = crate::channel::norm_sq(&w);
    Ok(S1Solution {
        channels,
        rows,
        solver,
        z_hat,
        r_min_k,
        w,
        p_min,
    })
}

#[derive(Clone, Debug)]
pub struct SymbolDesign {
    pub b: usize,
    /// Weights and amplitudes after refinement and rescaling to `P_max`.
    pub state: PrecoderState,
    pub weight_trace: Vec<WeightTraceRow>,
}

#[derive(Clone, Debug)]
pub struct DesignPoint {
    pub config: PhaseConfig,
    pub scene: Scene,
    pub channels: LosChannelSet,
    pub rows: Vec<Vec<C64>>,
    pub z_hat: Vec<f64>,
    pub r_min_k: Vec<f64>,
    /// Minimum power of symbol 0 at the chosen placement.
    pub p_min: f64,
    pub feasible: bool,
    pub symbols: Vec<SymbolDesign>,
    pub objective: f64,
    pub position_trace: Vec<PositionTraceRow>,
}

impl DesignPoint {
    pub fn refl(&self, cb: &PhaseCodebook) -> Vec<C64> {
        self.config.phasors(cb)
    }

    pub fn w0(&self) -> &[C64] {
        &self.symbols[0].state.w
    }

    /// Rates of symbol 0 against the noise bound.
    pub fn rate(&self) -> RateReport {
        let w = self.w0();
        snr_and_rate(&self.rows[..self.channels.k_users], w, &self.z_hat[..self.channels.k_users])
    }

    pub fn sum_rate(&self) -> f64 {
        self.rate().sum_rate
    }
}

fn objective_of(symbols: &[SymbolDesign], which: ObjectiveSymbols) -> f64 {
    match which {
        ObjectiveSymbols::First => symbols[0].state.t_hat.iter().sum(),
        ObjectiveSymbols::All => {
            symbols.iter().map(|s| s.state.t_hat.iter().sum::<f64>()).sum::<f64>() / symbols.len() as f64
        }
    }
}

/// Evaluates the design objective for IRS configurations from a fixed starting scene.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub scene: Scene,
    pub params: DesignParams,
    pub codebook: PhaseCodebook,
}

impl Evaluator {
    pub fn new(scene: Scene, params: DesignParams, codebook: PhaseCodebook) -> Self {
        Self {
            scene,
            params,
            codebook,
        }
    }

    pub fn m(&self) -> usize {
        self.scene.panel.m()
    }

    /// Placement, weight refinement and rescaling for `cfg`. With `all_symbols` every PSK
    /// symbol is designed; otherwise only those the objective needs.
    pub fn evaluate(&self, cfg: &PhaseConfig, all_symbols: bool) -> Result<DesignPoint> {
        let p = &self.params;
        let refl = cfg.phasors(&self.codebook);
        let (scene, s1, trace, feasible) = match position_outer_loop(&self.scene, p, &refl, 0) {
            Ok(r) => (r.scene, r.s1, r.trace, true),
            Err(Error::Infeasible { .. }) => {
                let s1 = solve_s1(&self.scene, p, &refl, 0)?;
                let row = PositionTraceRow {
                    iter: 0,
                    x_a: self.scene.uav.x,
                    y_a: self.scene.uav.y,
                    j2: f64::NAN,
                    p_min: s1.p_min,
                };
                (self.scene.clone(), s1, vec![row], false)
            }
            Err(e) => return Err(e),
        };
        let count = if all_symbols || p.objective_symbols == ObjectiveSymbols::All {
            p.constellation.order
        } else {
            1
        };
        let mut symbols = Vec::with_capacity(count);
        for b in 0..count {
            let w_b = if b == 0 {
                s1.w.clone()
            } else {
                s1.solver.solve(&p.constellation.targets(b, &s1.r_min_k))
            };
            let (t, w, wtrace) = if feasible && p.refine_weights {
                let st = alternate_optimize(
                    &s1.rows,
                    &s1.solver,
                    &p.constellation,
                    b,
                    &s1.r_min_k,
                    &w_b,
                    p.p_max,
                    &p.weights,
                )?;
                (st.t_hat, st.w, st.trace)
            } else {
                (s1.r_min_k.clone(), w_b, Vec::new())
            };
            let state = PrecoderState {
                w,
                t_hat: t,
                eve_amplitude: p.constellation.eve_amplitude,
            };
            let state = if state.power() > 0.0 {
                scale_to_power(&state, p.p_max)?
            } else {
                state
            };
            symbols.push(SymbolDesign {
                b,
                state,
                weight_trace: wtrace,
            });
        }
        let objective = objective_of(&symbols, p.objective_symbols);
        Ok(DesignPoint {
            config: cfg.clone(),
            scene,
            channels: s1.channels,
            rows: s1.rows,
            z_hat: s1.z_hat,
            r_min_k: s1.r_min_k,
            p_min: s1.p_min,
            feasible,
            symbols,
            objective,
            position_trace: trace,
        })
    }

    /// `base` re-evaluated under `cfg` with placement and every symbol's weights held fixed;
    /// amplitudes become the projections of the received points onto the symbol phases.
    pub fn with_fixed_weights(&self, base: &DesignPoint, cfg: &PhaseConfig) -> DesignPoint {
        let refl = cfg.phasors(&self.codebook);
        let set = &base.channels;
        let k = set.k_users;
        let rows: Vec<Vec<C64>> = (0..set.receivers.len()).map(|g| aggregate_los_channel(set, &refl, g)).collect();
        let c = &self.params.constellation;
        let symbols: Vec<SymbolDesign> = base
            .symbols
            .iter()
            .map(|s| {
                let rot = C64::from_polar(1.0, -c.user_phase(s.b));
                let t_hat = rows[..k].iter().map(|h| (dot(h, &s.state.w) * rot).re).collect();
                SymbolDesign {
                    b: s.b,
                    state: PrecoderState {
                        w: s.state.w.clone(),
                        t_hat,
                        eve_amplitude: s.state.eve_amplitude,
                    },
                    weight_trace: s.weight_trace.clone(),
                }
            })
            .collect();
        let objective = objective_of(&symbols, self.params.objective_symbols);
        DesignPoint {
            config: cfg.clone(),
            scene: base.scene.clone(),
            channels: base.channels.clone(),
            rows,
            z_hat: base.z_hat.clone(),
            r_min_k: base.r_min_k.clone(),
            p_min: base.p_min,
            feasible: base.feasible,
            symbols,
            objective,
            position_trace: base.position_trace.clone(),
        }
    }

    /// [`Evaluator::with_fixed_weights`] followed by the smallest weight change that puts the
    /// eavesdropper back on its target, rescaled to `P_max`.
    pub fn with_eve_restored(&self, base: &DesignPoint, cfg: &PhaseConfig) -> Result<DesignPoint> {
        let mut d = self.with_fixed_weights(base, cfg);
        let k = d.channels.k_users;
        let h_e = d.rows[d.channels.eve()].clone();
        let e2 = crate::channel::norm_sq(&h_e);
        let c = &self.params.constellation;
        for s in &mut d.symbols {
            let err = dot(&h_e, &s.state.w) - c.eve_target(s.b);
            let w: Vec<C64> = s.state.w.iter().zip(&h_e).map(|(x, h)| x - h.conj() * err / e2).collect();
            let rot = C64::from_polar(1.0, -c.user_phase(s.b));
            let t_hat = d.rows[..k].iter().map(|h| (dot(h, &w) * rot).re).collect();
            let st = PrecoderState { w, t_hat, eve_amplitude: s.state.eve_amplitude };
            s.state = if st.power() > 0.0 { scale_to_power(&st, self.params.p_max)? } else { st };
        }
        d.objective = objective_of(&d.symbols, self.params.objective_symbols);
        Ok(d)
    }

    /// `base` re-solved under `cfg` at the base placement: every symbol keeps its amplitudes and
    /// gets the minimum-norm weights for the new channels, rescaled to `P_max`.
    pub fn with_reweighting(&self, base: &DesignPoint, cfg: &PhaseConfig) -> Result<DesignPoint> {
        let refl = cfg.phasors(&self.codebook);
        let set = &base.channels;
        let rows: Vec<Vec<C64>> = (0..set.receivers.len()).map(|g| aggregate_los_channel(set, &refl, g)).collect();
        let solver = MinNormSolver::new(&rows)?;
        let c = &self.params.constellation;
        let symbols = base
            .symbols
            .iter()
            .map(|s| {
                let state = PrecoderState {
                    w: solver.solve(&c.targets(s.b, &s.state.t_hat)),
                    t_hat: s.state.t_hat.clone(),
                    eve_amplitude: s.state.eve_amplitude,
                };
                let state = if state.power() > 0.0 {
                    scale_to_power(&state, self.params.p_max)?
                } else {
                    state
                };
                Ok(SymbolDesign {
                    b: s.b,
                    state,
                    weight_trace: s.weight_trace.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let objective = objective_of(&symbols, self.params.objective_symbols);
        Ok(DesignPoint {
            config: cfg.clone(),
            scene: base.scene.clone(),
            channels: base.channels.clone(),
            rows,
            z_hat: base.z_hat.clone(),
            r_min_k: base.r_min_k.clone(),
            p_min: base.p_min,
            feasible: base.feasible,
            symbols,
            objective,
            position_trace: base.position_trace.clone(),
        })
    }

    /// Objective value, `-inf` when the configuration cannot be designed at all.
    pub fn objective(&self, cfg: &PhaseConfig) -> f64 {
        self.evaluate(cfg, false).map(|d| d.objective).unwrap_or(f64::NEG_INFINITY)
    }
}
