#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavdm::channel::{ChannelParams, C64};
use uavdm::config::{Profile, RunConfig};
use uavdm::design::DesignParams;
use uavdm::geometry::{AngleBox, Cartesian, Scene};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn desk() -> RunConfig {
    RunConfig::defaults(Profile::Desk)
}

/// Desk config keeping the first `k` users.
pub fn desk_k(k: usize) -> RunConfig {
    let mut c = desk();
    c.scene.users.truncate(k);
    c
}

pub fn scene_k(k: usize) -> Scene {
    desk_k(k).scene().unwrap()
}

pub fn params() -> DesignParams {
    desk().design_params(1).unwrap()
}

pub fn channel_params() -> ChannelParams {
    params().channel
}

pub fn rand_c<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn rand_cvec<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| rand_c(rng)).collect()
}

pub fn unit_phasors<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))).collect()
}

/// Desk scene with `k` users and Eve uniform over `[0, 25]^2` and the UAV at random box angles.
pub fn random_scene<R: Rng>(rng: &mut R, k: usize) -> Scene {
    let mut s = scene_k(k);
    let ground = s.ground_z();
    let pt = |rng: &mut R| Cartesian::new(rng.random_range(0.0..25.0), rng.random_range(0.0..25.0), ground);
    s.users = (0..k).map(|_| pt(rng)).collect();
    s.eve = pt(rng);
    let b = s.angle_box;
    let t = rng.random_range(b.theta_min..b.theta_max);
    let p = rng.random_range(b.phi_min..b.phi_max);
    s.uav = s.uav_from_box_angles(t, p);
    s
}

/// Box that admits any azimuth and any radius up to about 1.1 km.
pub fn open_box() -> AngleBox {
    AngleBox {
        theta_min: 95f64.to_radians(),
        theta_max: PI,
        phi_min: -PI,
        phi_max: PI,
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Aggregated LoS rows and symbol-0 targets of a random desk scene with `k` users and random phases.
pub fn desk_instance<R: Rng>(rng: &mut R, k: usize) -> (Vec<Vec<C64>>, Vec<C64>) {
    use uavdm::channel::{aggregate_los_channel, los_channels, noise_variance_upper_bound};
    use uavdm::precoding::user_min_amplitude;
    let p = params();
    let scene = random_scene(rng, k);
    let set = los_channels(&scene, &p.channel).unwrap();
    let refl = unit_phasors(rng, set.m());
    let rows: Vec<Vec<C64>> = (0..=k).map(|g| aggregate_los_channel(&set, &refl, g)).collect();
    let r: Vec<f64> = (0..k)
        .map(|g| {
            let z = noise_variance_upper_bound(&set, p.p_max, g).unwrap();
            user_min_amplitude(p.r_min, p.gamma, p.constellation.varpi(), z).unwrap()
        })
        .collect();
    let b = rng.random_range(0..p.constellation.order);
    (rows, p.constellation.targets(b, &r))
}

/// Grid search of J2 over the feasible box: 1 m interior and `fine` m along the boundary, then
/// `fine` m within 3 m of the best point.
pub fn j2_grid_oracle(scene: &Scene, t: &uavdm::position::PositionWeights, fine: f64) -> (f64, f64, f64) {
    use uavdm::position::j2_value;
    let h = scene.uav_z() - scene.irs_origin.z;
    let (lo, hi) = scene.angle_box.radius_bounds(h);
    let r = hi.min(2000.0).ceil();
    let o = scene.irs_origin;
    let eval = |x: f64, y: f64| -> Option<f64> {
        let s = scene.with_uav(scene.uav_at(x, y));
        if !s.uav_in_box(0.0) {
            return None;
        }
        j2_value(&s, t).ok()
    };
    let mut best = (o.x, o.y, f64::INFINITY);
    let n = r as i64;
    for i in -n..=n {
        for j in -n..=n {
            let (x, y) = (o.x + i as f64, o.y + j as f64);
            if let Some(v) = eval(x, y) {
                if v < best.2 {
                    best = (x, y, v);
                }
            }
        }
    }
    // the box boundary at the fine spacing
    let b = scene.angle_box;
    let mut edge = Vec::new();
    for rho in [lo, r.min(hi)] {
        let n = ((b.phi_max - b.phi_min) * rho / fine).ceil().max(1.0) as usize;
        for i in 0..=n {
            let phi = b.phi_min + (b.phi_max - b.phi_min) * i as f64 / n as f64;
            edge.push((rho, phi));
        }
    }
    let n = ((r.min(hi) - lo) / fine).ceil().max(1.0) as usize;
    for phi in [b.phi_min, b.phi_max] {
        for i in 0..=n {
            edge.push((lo + (r.min(hi) - lo) * i as f64 / n as f64, phi));
        }
    }
    for (rho, phi) in edge {
        let p = scene.project_uav(o.x + rho * phi.cos(), o.y + rho * phi.sin());
        if let Ok(v) = j2_value(&scene.with_uav(p), t) {
            if v < best.2 {
                best = (p.x, p.y, v);
            }
        }
    }
    let (cx, cy) = (best.0, best.1);
    let m = (3.0 / fine).round() as i64;
    for i in -m..=m {
        for j in -m..=m {
            let (x, y) = (cx + i as f64 * fine, cy + j as f64 * fine);
            if let Some(v) = eval(x, y) {
                if v < best.2 {
                    best = (x, y, v);
                }
            }
        }
    }
    best
}

/// Position weights from the real channels of `scene` under random phases and the
/// minimum-norm symbol-0 weights.
pub fn channel_weights<R: Rng>(rng: &mut R, scene: &Scene) -> uavdm::position::PositionWeights {
    use uavdm::channel::los_channels;
    use uavdm::design::solve_s1;
    let p = params();
    let set = los_channels(scene, &p.channel).unwrap();
    let refl = unit_phasors(rng, set.m());
    let s1 = solve_s1(scene, &p, &refl, 0).unwrap();
    uavdm::position::position_weights(&s1.channels, &refl, &s1.w).unwrap()
}

/// `w` with `||w||^2 <= p_max` and `||G_bar w||^2 <= N p_max`.
pub fn feasible_w<R: Rng>(set: &uavdm::channel::LosChannelSet, p_max: f64, rng: &mut R) -> Vec<C64> {
    let n = set.n();
    let u: Vec<C64> = set.h_ar.iter().map(|h| h.conj() / (n as f64).sqrt()).collect();
    let mut v = rand_cvec(rng, n);
    let along: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    for (x, a) in v.iter_mut().zip(&u) {
        *x -= a * along;
    }
    let c2 = rng.random_range(0.0..1.0) * p_max / set.m() as f64;
    let c = C64::from_polar(c2.sqrt(), rng.random_range(0.0..2.0 * PI));
    let room = p_max - c2;
    let vn = uavdm::channel::norm_sq(&v).sqrt();
    let r = rng.random_range(0.0..1.0f64).sqrt() * room.sqrt() / vn;
    v.iter().zip(&u).map(|(x, a)| x * r + a * c).collect()
}
