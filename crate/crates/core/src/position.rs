//! UAV placement: the distance-weighted surrogate J2, its derivatives, the projected
//! fixed-point solver and the outer loop that re-solves the precoder after each move.

use serde::{Deserialize, Serialize};

use crate::channel::{cascade_gain, dot, LosChannelSet, C64};
use crate::design::{solve_s1, DesignParams, S1Solution};
use crate::error::{domain, Error, Result};
use crate::geometry::{Cartesian, Scene};

/// Per-user weights `T_{k,1}` (IRS leg) and `T_{k,2}` (direct leg).
#[derive(Clone, Debug, PartialEq)]
pub struct PositionWeights {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
}

impl PositionWeights {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            t1: self.t1.iter().map(|x| x * c).collect(),
            t2: self.t2.iter().map(|x| x * c).collect(),
        }
    }
}

/// `(b_bar, b)`: cascade beam gain through the IRS and direct beam gain.
pub fn beam_gains(set: &LosChannelSet, refl: &[C64], w: &[C64], g: usize) -> (C64, C64) {
    let rx = &set.receivers[g];
    let b_bar = cascade_gain(set, rx, refl) * dot(&set.h_ar, w);
    (b_bar, dot(&rx.h_a, w))
}

pub fn position_weights(set: &LosChannelSet, refl: &[C64], w: &[C64]) -> Result<PositionWeights> {
    let mut t1 = Vec::with_capacity(set.k_users);
    let mut t2 = Vec::with_capacity(set.k_users);
    for k in 0..set.k_users {
        let (bb, b) = beam_gains(set, refl, w, k);
        let l = &set.receivers[k].loss;
        let d1 = (l.rho * l.eps_ar).sqrt() * l.zeta[0] * bb.norm();
        let d2 = (l.rho * l.eps_ag).sqrt() * b.norm();
        if !(d1 > 0.0) || !(d2 > 0.0) {
            return domain(format!("zero beam gain at user {k}; position weights undefined"));
        }
        t1.push(1.0 / d1);
        t2.push(1.0 / d2);
    }
    Ok(PositionWeights { t1, t2 })
}

fn check(scene: &Scene, t: &PositionWeights) -> Result<()> {
    if t.t1.len() != scene.k_users() || t.t2.len() != scene.k_users() {
        return domain("one weight pair per user is required");
    }
    if scene.uav.dist(&scene.irs_origin) <= 0.0 || scene.users.iter().any(|u| scene.uav.dist(u) <= 0.0) {
        return domain("UAV coincides with the IRS or a user");
    }
    Ok(())
}

/// `sum_k (d_AR T_{k,1} + d_{A,k} T_{k,2})`.
pub fn j2_value(scene: &Scene, t: &PositionWeights) -> Result<f64> {
    check(scene, t)?;
    let d_ar = scene.uav.dist(&scene.irs_origin);
    Ok(scene
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| d_ar * t.t1[k] + scene.uav.dist(u) * t.t2[k])
        .sum())
}

pub fn j2_gradient(scene: &Scene, t: &PositionWeights) -> Result<[f64; 2]> {
    check(scene, t)?;
    let a = &scene.uav;
    let r = &scene.irs_origin;
    let d_ar = a.dist(r);
    let mut g = [0.0; 2];
    for (k, u) in scene.users.iter().enumerate() {
        let d_k = a.dist(u);
        g[0] += (a.x - r.x) / d_ar * t.t1[k] + (a.x - u.x) / d_k * t.t2[k];
        g[1] += (a.y - r.y) / d_ar * t.t1[k] + (a.y - u.y) / d_k * t.t2[k];
    }
    Ok(g)
}

pub fn j2_hessian(scene: &Scene, t: &PositionWeights) -> Result<[[f64; 2]; 2]> {
    check(scene, t)?;
    let a = &scene.uav;
    let r = &scene.irs_origin;
    let d_ar = a.dist(r);
    let mut h = [[0.0; 2]; 2];
    for (k, u) in scene.users.iter().enumerate() {
        let d_k = a.dist(u);
        let terms = [(r, d_ar, t.t1[k]), (u, d_k, t.t2[k])];
        for (p, d, w) in terms {
            let dx = a.x - p.x;
            let dy = a.y - p.y;
            let d3 = d * d * d;
            h[0][0] += w / d - dx * dx * w / d3;
            h[1][1] += w / d - dy * dy * w / d3;
            h[0][1] -= dx * dy * w / d3;
        }
    }
    h[1][0] = h[0][1];
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub outer_max_iter: usize,
}

impl Default for PositionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            outer_max_iter: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub position: Cartesian,
    pub iterations: usize,
    pub converged: bool,
    /// `(x, y, J2)` per accepted iterate, starting with the initial point.
    pub trace: Vec<[f64; 3]>,
}

/// Weighted-mean map of the stationarity condition, before projection.
fn fixed_point_map(scene: &Scene, t: &PositionWeights) -> (f64, f64) {
    let a = &scene.uav;
    let r = &scene.irs_origin;
    let d_ar = a.dist(r).max(1e-12);
    let (mut num_x, mut num_y, mut den) = (0.0, 0.0, 0.0);
    for (k, u) in scene.users.iter().enumerate() {
        let d_k = a.dist(u).max(1e-12);
        let wr = t.t1[k] / d_ar;
        let wk = t.t2[k] / d_k;
        num_x += r.x * wr + u.x * wk;
        num_y += r.y * wr + u.y * wk;
        den += wr + wk;
    }
    (num_x / den, num_y / den)
}

const NEAR: f64 = 1e-6;

fn too_close(scene: &Scene, p: &Cartesian) -> bool {
    p.dist(&scene.irs_origin) < NEAR || scene.users.iter().any(|u| p.dist(u) < NEAR)
}

/// Projected fixed-point iteration on the stationarity condition of J2 with frozen weights.
pub fn fixed_point_solve(scene: &Scene, t: &PositionWeights, tol: f64, max_iter: usize) -> Result<FixedPointResult> {
    if !scene.uav_in_box(1e-9) {
        return domain("initial UAV position lies outside the angle box");
    }
    let mut cur = scene.clone();
    let mut j_cur = j2_value(&cur, t)?;
    let mut trace = vec![[cur.uav.x, cur.uav.y, j_cur]];
    let mut last_step = f64::INFINITY;
    let mut growth = 0usize;
    for it in 1..=max_iter {
        let (tx, ty) = fixed_point_map(&cur, t);
        let mut accepted = None;
        let mut frac = 1.0;
        for _ in 0..40 {
            let x = cur.uav.x + frac * (tx - cur.uav.x);
            let y = cur.uav.y + frac * (ty - cur.uav.y);
            let cand = cur.project_uav(x, y);
            if too_close(&cur, &cand) {
                frac *= 0.5;
                continue;
            }
            let j = j2_value(&cur.with_uav(cand), t)?;
            if j <= j_cur {
                accepted = Some((cand, j));
                break;
            }
            frac *= 0.5;
        }
        let Some((cand, j)) = accepted else {
            return Ok(FixedPointResult {
                position: cur.uav,
                iterations: it,
                converged: true,
                trace,
            });
        };
        let step = cand.dist(&cur.uav);
        growth = if step > last_step { growth + 1 } else { 0 };
        if growth >= 10 {
            return Err(Error::Convergence {
                trace: trace.iter().map(|r| [r[0], r[1]]).collect(),
            });
        }
        last_step = step;
        cur.uav = cand;
        j_cur = j;
        trace.push([cand.x, cand.y, j]);
        if step < tol {
            return Ok(FixedPointResult {
                position: cand,
                iterations: it,
                converged: true,
                trace,
            });
        }
    }
    Ok(FixedPointResult {
        position: cur.uav,
        iterations: max_iter,
        converged: false,
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositionTraceRow {
    pub iter: usize,
    pub x_a: f64,
    pub y_a: f64,
    pub j2: f64,
    pub p_min: f64,
}

#[derive(Clone, Debug)]
pub struct OuterLoopResult {
    pub scene: Scene,
    pub s1: S1Solution,
    pub trace: Vec<PositionTraceRow>,
}

/// Alternate UAV placement and the minimum-power precoder for symbol `b`.
/// Stops when the next precoder exceeds `P_max` or needs more power than the current one.
pub fn position_outer_loop(
    scene: &Scene,
    params: &DesignParams,
    refl: &[C64],
    b: usize,
) -> Result<OuterLoopResult> {
    let mut cur_scene = scene.clone();
    let mut cur = solve_s1(&cur_scene, params, refl, b)?;
    if cur.p_min > params.p_max {
        return Err(Error::Infeasible {
            constraint: "minimum-power precoder exceeds P_max at the initial position".into(),
            p_min: cur.p_min,
            p_max: params.p_max,
        });
    }
    let opts = params.position;
    let mut trace = Vec::new();
    let t0 = position_weights(&cur.channels, refl, &cur.w)?;
    trace.push(PositionTraceRow {
        iter: 0,
        x_a: cur_scene.uav.x,
        y_a: cur_scene.uav.y,
        j2: j2_value(&cur_scene, &t0)?,
        p_min: cur.p_min,
    });
    for l in 1..=opts.outer_max_iter {
        let t = position_weights(&cur.channels, refl, &cur.w)?;
        let fp = fixed_point_solve(&cur_scene, &t, opts.tol, opts.max_iter)?;
        let moved = fp.position.dist(&cur_scene.uav);
        let next_scene = cur_scene.with_uav(fp.position);
        let next = match solve_s1(&next_scene, params, refl, b) {
            Ok(s) => s,
            Err(Error::Singular { .. }) => break,
            Err(e) => return Err(e),
        };
        if next.p_min > params.p_max || next.p_min > cur.p_min {
            break;
        }
        trace.push(PositionTraceRow {
            iter: l,
            x_a: next_scene.uav.x,
            y_a: next_scene.uav.y,
            j2: j2_value(&next_scene, &t)?,
            p_min: next.p_min,
        });
        cur_scene = next_scene;
        cur = next;
        if moved < opts.tol {
            break;
        }
    }
    Ok(OuterLoopResult {
        scene: cur_scene,
        s1: cur,
        trace,
    })
}
