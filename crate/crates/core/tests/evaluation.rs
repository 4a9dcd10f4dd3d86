mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use uavdm::channel::{aggregate_los_channel, dot, los_channels, C64};
use uavdm::eval::beammap::{beam_response_map, mw_to_dbm, received_power, GridSpec};
use uavdm::eval::ber::{ber_analytic, ber_from_points, ber_monte_carlo, q_function, qpsk_reference};
use uavdm::eval::dof::{dof_check, numerical_rank};
use uavdm::eval::rate::snr_and_rate;
use uavdm::geometry::Cartesian;
use uavdm::pipeline::{optimize, prepare, Method};
use uavdm::sweep::dof_scenes;

fn qpsk(a: f64) -> Vec<C64> {
    (0..4).map(|b| C64::from_polar(a, (2 * b + 1) as f64 * FRAC_PI_4)).collect()
}

// Abramowitz and Stegun table 26.1: P(1) = 0.8413447461
const Q1: f64 = 0.1586552539;

#[test]
fn rate_examples() {
    let h = vec![vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)], vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]];
    let w = vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0)];
    // |h1 w| = 7, so t^2 = 49
    let r = snr_and_rate(&h, &w, &[2.0, 49.0]);
    assert_eq!(r.snr[0], 0.0);
    assert_eq!(r.rate[0], 0.0);
    assert!((r.rate[1] - 1.0).abs() < 1e-15);
    assert!((r.sum_rate - 1.0).abs() < 1e-15);
}

#[test]
fn rate_matches_formula_on_random_instances() {
    let mut rng = common::rng(11);
    for _ in 0..50 {
        let k = rng.random_range(1..5);
        let n = rng.random_range(1..9);
        let rows: Vec<Vec<C64>> = (0..k).map(|_| common::rand_cvec(&mut rng, n)).collect();
        let w = common::rand_cvec(&mut rng, n);
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..10.0)).collect();
        let r = snr_and_rate(&rows, &w, &z);
        let mut sum = 0.0;
        for i in 0..k {
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..n {
                re += rows[i][j].re * w[j].re - rows[i][j].im * w[j].im;
                im += rows[i][j].re * w[j].im + rows[i][j].im * w[j].re;
            }
            let snr = (re * re + im * im) / z[i];
            let rate = (1.0 + snr).ln() / 2f64.ln();
            assert!(common::close(r.snr[i], snr, 1e-12));
            assert!(common::close(r.rate[i], rate, 1e-12));
            assert!(r.rate[i] >= 0.0);
            sum += rate;
        }
        assert!(common::close(r.sum_rate, sum, 1e-12));
    }
}

#[test]
fn analytic_ber_examples() {
    let l = [1.0; 4];
    let a = [FRAC_PI_2; 4];
    assert!((ber_analytic(&l, &a, 2.0).unwrap() - Q1).abs() < 1e-9);
    assert!((q_function(0.0) - 0.5).abs() < 1e-15);
    assert!((ber_analytic(&l, &a, 1e15).unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(ber_analytic(&l, &a, 1e-9).unwrap(), 0.0);
    assert!(ber_analytic(&l, &a, 0.0).is_err());
    assert!(ber_analytic(&l, &a, -1.0).is_err());
    assert!(ber_analytic(&l, &[0.0; 4], 1.0).is_err());
    assert!(ber_analytic(&l, &[2.0; 4], 1.0).is_err());
    assert!(ber_analytic(&l[..3], &a, 1.0).is_err());
}

#[test]
fn noiseless_monte_carlo_is_error_free() {
    let mut rng = common::rng(1);
    let e = ber_from_points(&qpsk(1e-3), &[0.0; 4], 20_000, &mut rng).unwrap();
    assert_eq!(e.ber, 0.0);
    assert_eq!(e.bit_errors, 0);
}

#[test]
fn zero_points_give_coin_flips() {
    let mut rng = common::rng(2);
    let e = ber_from_points(&[C64::new(0.0, 0.0); 4], &[1e-9; 4], 100_000, &mut rng).unwrap();
    assert!((e.ber - 0.5).abs() < 0.02, "ber {}", e.ber);
    assert!(e.ci_halfwidth > 0.0 && e.ci_halfwidth < 0.01);
}

#[test]
fn monte_carlo_brackets_qpsk_reference() {
    let mut rng = common::rng(3);
    let trials = 200_000;
    for snr_db in [0.0, 4.0, 8.0] {
        let snr = 10f64.powf(snr_db / 10.0);
        let e = ber_from_points(&qpsk(snr.sqrt()), &[1.0; 4], trials, &mut rng).unwrap();
        let p = qpsk_reference(snr);
        let sd = (p * (1.0 - p) / (2.0 * trials as f64)).sqrt();
        assert!((e.ber - p).abs() <= 3.0 * sd, "snr {snr_db} dB: mc {} ref {p}", e.ber);
    }
}

#[test]
fn monte_carlo_rejects_few_trials() {
    let set = los_channels(&common::scene_k(3), &common::channel_params()).unwrap();
    let refl = vec![C64::new(1.0, 0.0); set.m()];
    let row = aggregate_los_channel(&set, &refl, 0);
    let w = vec![vec![C64::new(0.0, 0.0); set.n()]; 4];
    let mut rng = common::rng(4);
    assert!(ber_monte_carlo(&set, &row, 0, &w, 1e-6, 9_999, &mut rng).is_err());
    assert!(ber_monte_carlo(&set, &row, 0, &w, -1.0, 10_000, &mut rng).is_err());
}

#[test]
fn feasible_design_separates_user_and_eve_ber() {
    let cfg = uavdm::config::RunConfig::load(
        std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/single-user.toml")),
        None,
    )
    .unwrap();
    // near-LoS links; at eps = 0.9 the leakage caps the user SNR near 2
    let mut cfg = cfg;
    cfg.channel.eps_ar = 0.999;
    cfg.channel.eps_rg = 0.999;
    cfg.channel.eps_ag = 0.999;
    let eval = prepare(&cfg, 0).unwrap();
    let d = optimize(&eval, &cfg, 0, Method::Ce).unwrap().design;
    assert!(d.feasible);
    let w: Vec<Vec<C64>> = d.symbols.iter().map(|s| s.state.w.clone()).collect();
    let mut rng = common::rng(5);
    let n0 = 1e-12;
    let user = ber_monte_carlo(&d.channels, &d.rows[0], 0, &w, n0, 100_000, &mut rng).unwrap();
    let eve = ber_monte_carlo(&d.channels, &d.rows[1], 1, &w, n0, 100_000, &mut rng).unwrap();
    assert!(user.ber < 1e-3, "user ber {}", user.ber);
    assert!((eve.ber - 0.5).abs() < 0.05, "eve ber {}", eve.ber);
}

#[test]
fn rank_of_known_matrices() {
    let z = DMatrix::<C64>::zeros(3, 4);
    assert_eq!(numerical_rank(&z), 0);
    let u = DMatrix::from_fn(3, 1, |i, _| C64::new(i as f64 + 1.0, 0.5));
    let v = DMatrix::from_fn(1, 4, |_, j| C64::from_polar(1.0, j as f64));
    assert_eq!(numerical_rank(&(&u * &v)), 1);
    assert_eq!(numerical_rank(&DMatrix::<C64>::identity(4, 4)), 4);
}

#[test]
fn dof_bounds_on_random_phases() {
    let mut rng = common::rng(6);
    for _ in 0..20 {
        let scene = common::random_scene(&mut rng, 3);
        let set = los_channels(&scene, &common::channel_params()).unwrap();
        let refl = common::unit_phasors(&mut rng, set.m());
        let r = dof_check(&set, &refl, 4).unwrap();
        assert!(r.eve_rank <= 2 && r.eve_bound_ok);
        assert!(r.user_rank <= 4 && r.user_bound_ok);
        assert_eq!(r.eve_cascade_rank, 1);
        assert_eq!(r.eve_direct_rank, 1);
    }
    let set = los_channels(&common::scene_k(3), &common::channel_params()).unwrap();
    assert!(dof_check(&set, &vec![C64::new(1.0, 0.0); set.m()], 0).is_err());
    assert!(dof_check(&set, &[C64::new(1.0, 0.0)], 4).is_err());
}

#[test]
fn colinear_eve_drops_to_rank_one() {
    let mut scene = common::scene_k(3);
    let (a, r) = (scene.uav, scene.irs_origin);
    let t = (r.z - scene.ground_z()) / (a.z - r.z);
    scene.eve = Cartesian::new(r.x + t * (r.x - a.x), r.y + t * (r.y - a.y), scene.ground_z());
    let set = los_channels(&scene, &common::channel_params()).unwrap();
    let r = dof_check(&set, &vec![C64::new(1.0, 0.0); set.m()], 4).unwrap();
    assert_eq!(r.eve_rank, 1);
}

#[test]
fn dof_sweep_holds_on_100_scenes() {
    let cfg = common::desk();
    let rows = dof_scenes(&cfg, 9, 100).unwrap();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.eve_bound_ok && r.user_bound_ok));
}

#[test]
fn beammap_cell_at_user_matches_received_power() {
    let mut rng = common::rng(8);
    let scene = common::scene_k(3);
    let set = los_channels(&scene, &common::channel_params()).unwrap();
    let refl = common::unit_phasors(&mut rng, set.m());
    let w = common::rand_cvec(&mut rng, set.n());
    // 1 m cells centred on integer coordinates
    let grid = GridSpec {
        x_min: -0.5,
        x_max: 24.5,
        y_min: -0.5,
        y_max: 24.5,
        nx: 25,
        ny: 25,
        z: None,
    };
    let map = beam_response_map(&set, &refl, &w, &grid, scene.ground_z()).unwrap();
    assert_eq!(map.cells.len(), 625);
    assert!(map.cells.iter().all(|c| c.power_dbm.is_finite()));
    assert_eq!(map.markers.len(), 4);
    for (g, m) in map.markers.iter().enumerate() {
        let t2 = dot(&aggregate_los_channel(&set, &refl, g), &w).norm_sqr();
        assert!((m.power_dbm - mw_to_dbm(t2)).abs() < 1e-9);
        assert!((m.cell_power_dbm - m.power_dbm).abs() < 1e-9, "{}", m.label);
        assert!(m.inside);
    }
    assert_eq!(map.eve_marker().unwrap().label, "eve");
    assert_eq!(map.user_markers().count(), 3);
    let p = received_power(&set, &refl, &w, Cartesian::new(3.0, 4.0, scene.ground_z())).unwrap();
    assert!((map.cell(3, 4).power_dbm - mw_to_dbm(p)).abs() < 1e-12);
    let bad = GridSpec { nx: 0, ..grid };
    assert!(beam_response_map(&set, &refl, &w, &bad, scene.ground_z()).is_err());
}

#[test]
fn beammap_invariant_under_user_relabeling() {
    let mut rng = common::rng(9);
    let scene = common::scene_k(3);
    let mut swapped = scene.clone();
    swapped.users.reverse();
    let p = common::channel_params();
    let (a, b) = (los_channels(&scene, &p).unwrap(), los_channels(&swapped, &p).unwrap());
    let refl = common::unit_phasors(&mut rng, a.m());
    let w = common::rand_cvec(&mut rng, a.n());
    let grid = GridSpec {
        nx: 16,
        ny: 16,
        ..GridSpec::default()
    };
    let ma = beam_response_map(&a, &refl, &w, &grid, scene.ground_z()).unwrap();
    let mb = beam_response_map(&b, &refl, &w, &grid, scene.ground_z()).unwrap();
    assert_eq!(ma.cells, mb.cells);
    let pa: Vec<f64> = ma.user_markers().map(|m| m.power_dbm).collect();
    let mut pb: Vec<f64> = mb.user_markers().map(|m| m.power_dbm).collect();
    pb.reverse();
    assert_eq!(pa, pb);
}

#[test]
fn optimized_desk_map_favours_users_over_eve() {
    let cfg = common::desk();
    let eval = prepare(&cfg, 1).unwrap();
    let d = optimize(&eval, &cfg, 1, Method::Ce).unwrap().design;
    let map = beam_response_map(&d.channels, &d.refl(&eval.codebook), d.w0(), &cfg.evaluation.beammap, d.scene.ground_z()).unwrap();
    let weakest_user = map.user_markers().map(|m| m.cell_power_dbm).fold(f64::INFINITY, f64::min);
    let eve = map.eve_marker().unwrap().cell_power_dbm;
    assert!(weakest_user - eve >= 20.0, "users {weakest_user} dBm, eve {eve} dBm");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_ber_monotone(
        l in prop::collection::vec(1e-3f64..10.0, 4),
        a in prop::collection::vec(0.05f64..FRAC_PI_2, 4),
        n0 in 1e-3f64..10.0,
        f in 1.01f64..4.0,
        i in 0usize..4,
    ) {
        let base = ber_analytic(&l, &a, n0).unwrap();
        prop_assert!((0.0..=0.5).contains(&base));
        prop_assert!(ber_analytic(&l, &a, n0 * f).unwrap() >= base);
        let mut l2 = l.clone();
        l2[i] *= f;
        prop_assert!(ber_analytic(&l2, &a, n0).unwrap() <= base);
    }

    #[test]
    fn qpsk_reference_in_range(snr in 0.0f64..1e3) {
        let p = qpsk_reference(snr);
        prop_assert!((0.0..=0.5).contains(&p));
        prop_assert!(qpsk_reference(snr + 1.0) <= p);
    }

    #[test]
    fn ber_estimate_in_range(a in 0.0f64..3.0, s in 0u64..1000) {
        let mut rng = common::rng(s);
        let e = ber_from_points(&qpsk(a), &[1.0; 4], 10_000, &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&e.ber));
        prop_assert!(e.ci_halfwidth >= 0.0);
    }
}
