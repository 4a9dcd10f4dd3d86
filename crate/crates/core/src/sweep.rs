//! Parameter sweeps. Every point reuses the run seed, so a one-point sweep reproduces a single run.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::los_channels;
use crate::config::{rng_for, stream, RunConfig};
use crate::error::Result;
use crate::eval::dof::{dof_check, DofReport};
use crate::geometry::Cartesian;
use crate::phase::PhaseConfig;
use crate::pipeline::{ber_sweep, optimize, optimize_methods, prepare, BerRow, Method};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub method: Method,
    pub sum_rate: Option<f64>,
    /// `ok`, `infeasible` (design exceeds P_max and was rescaled) or `error: ...`.
    pub status: String,
}

fn point(cfg: &RunConfig, seed: u64, methods: &[Method], value: f64) -> Vec<SweepRow> {
    let eval = match cfg.validate().and_then(|_| prepare(cfg, seed)) {
        Ok(e) => e,
        Err(e) => {
            return methods
                .iter()
                .map(|&method| SweepRow {
                    value,
                    method,
                    sum_rate: None,
                    status: format!("error: {e}"),
                })
                .collect()
        }
    };
    optimize_methods(&eval, cfg, seed, methods)
        .into_iter()
        .zip(methods)
        .map(|(r, &method)| match r {
            Ok(o) => SweepRow {
                value,
                method,
                sum_rate: Some(o.design.sum_rate()),
                status: if o.design.feasible { "ok" } else { "infeasible" }.into(),
            },
            Err(e) => SweepRow {
                value,
                method,
                sum_rate: None,
                status: format!("error: {e}"),
            },
        })
        .collect()
}

fn sweep_with<F>(cfg: &RunConfig, seed: u64, values: &[f64], methods: &[Method], apply: F) -> Vec<SweepRow>
where
    F: Fn(&mut RunConfig, f64) + Sync,
{
    values
        .par_iter()
        .map(|&v| {
            let mut c = cfg.clone();
            apply(&mut c, v);
            point(&c, seed, methods, v)
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Sum rate against the transmit budget in dBm.
pub fn rate_sweep(cfg: &RunConfig, seed: u64, p_max_dbm: &[f64], methods: &[Method]) -> Vec<SweepRow> {
    sweep_with(cfg, seed, p_max_dbm, methods, |c, v| c.power.p_max_dbm = v)
}

/// Sum rate against the number of users; the first `K_u` configured users are kept.
pub fn k_sweep(cfg: &RunConfig, seed: u64, k_users: &[usize], methods: &[Method]) -> Vec<SweepRow> {
    let values: Vec<f64> = k_users.iter().map(|&k| k as f64).collect();
    let total = cfg.scene.users.len();
    values
        .par_iter()
        .zip(k_users)
        .map(|(&v, &k)| {
            if k == 0 || k > total {
                return methods
                    .iter()
                    .map(|&method| SweepRow {
                        value: v,
                        method,
                        sum_rate: None,
                        status: format!("error: K_u = {k} outside 1..={total} configured users"),
                    })
                    .collect();
            }
            let mut c = cfg.clone();
            c.scene.users.truncate(k);
            point(&c, seed, methods, v)
        })
        .collect::<Vec<_>>()
        .concat()
}

/// BER of every receiver over `n0` for the design found by `method`.
pub fn n0_sweep(cfg: &RunConfig, seed: u64, method: Method, n0: &[f64]) -> Result<Vec<BerRow>> {
    let eval = prepare(cfg, seed)?;
    let opt = optimize(&eval, cfg, seed, method)?;
    ber_sweep(&opt.design, n0, cfg.evaluation.ber_trials, seed)
}

/// Rank check on random LoS scenes: ground nodes uniform over the beam-map extent, UAV uniform
/// over the angle box, uniformly random IRS configuration.
pub fn dof_scenes(cfg: &RunConfig, seed: u64, count: usize) -> Result<Vec<DofReport>> {
    let base = cfg.scene()?;
    let params = cfg.design_params(seed)?.channel;
    let cb = cfg.codebook()?;
    let grid = cfg.evaluation.beammap;
    let n_e = cfg.evaluation.eve_antennas;
    (0..count)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(seed, (stream::DOF << 32) | s as u64);
            let z = base.ground_z();
            let mut ground = || {
                Cartesian::new(
                    rng.random_range(grid.x_min..=grid.x_max),
                    rng.random_range(grid.y_min..=grid.y_max),
                    z,
                )
            };
            let users: Vec<Cartesian> = (0..base.users.len()).map(|_| ground()).collect();
            let eve = ground();
            let b = base.angle_box;
            let mut scene = base.clone();
            scene.users = users;
            scene.eve = eve;
            let t = rng.random_range(b.theta_min..=b.theta_max);
            let p = rng.random_range(b.phi_min..=b.phi_max);
            scene.uav = scene.uav_from_box_angles(t, p);
            let cfg_phi = PhaseConfig {
                indices: (0..scene.panel.m()).map(|_| rng.random_range(0..cb.size())).collect(),
            };
            let set = los_channels(&scene, &params)?;
            dof_check(&set, &cfg_phi.phasors(&cb), n_e)
        })
        .collect()
}
