mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;
use uavdm::channel::{los_channels, C64};
use uavdm::phase::bcd::*;
use uavdm::phase::ce::*;
use uavdm::phase::hybrid::*;
use uavdm::phase::vt::*;
use uavdm::phase::{PhaseCodebook, PhaseConfig};
use uavdm::position::beam_gains;

fn all_configs(m: usize, q: usize) -> Vec<PhaseConfig> {
    (0..q.pow(m as u32))
        .map(|mut x| {
            let mut indices = Vec::with_capacity(m);
            for _ in 0..m {
                indices.push(x % q);
                x /= q;
            }
            PhaseConfig { indices }
        })
        .collect()
}

fn random_terms<R: Rng>(rng: &mut R, m: usize) -> VtTerms {
    VtTerms { tau: common::rand_cvec(rng, m) }
}

fn single_user_eval() -> (uavdm::design::Evaluator, uavdm::config::RunConfig) {
    let cfg = uavdm::config::RunConfig::load(
        std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/single-user.toml")),
        None,
    )
    .unwrap();
    (uavdm::pipeline::prepare(&cfg, 1).unwrap(), cfg)
}

#[test]
fn codebook_grid() {
    for bits in 1..5 {
        let cb = PhaseCodebook::new(bits).unwrap();
        assert_eq!(cb.size(), 1 << bits);
        for (i, p) in cb.phases().iter().enumerate() {
            assert_eq!(*p, 2.0 * PI * i as f64 / cb.size() as f64);
            assert!((cb.phasor(i).norm() - 1.0).abs() < 1e-15);
        }
    }
    assert!(PhaseCodebook::new(0).is_err());
}

#[test]
fn vt_terms_examples() {
    let mut s = common::scene_k(1);
    s.panel.m_y = 1;
    s.panel.m_z = 1;
    let set = los_channels(&s, &common::channel_params()).unwrap();
    let mut rng = common::rng(1);
    let w = common::rand_cvec(&mut rng, 8);
    let t = vt_terms(&set, &w, 0);
    assert_eq!(t.tau.len(), 1);
    assert!((t.tau[0] - set.g_bar_w(&w)[0] * set.receivers[0].h_r[0]).norm() < 1e-18);
    let set = los_channels(&common::scene_k(3), &common::channel_params()).unwrap();
    let z = vt_terms(&set, &[C64::new(0.0, 0.0); 8], 2);
    assert!(z.tau.iter().all(|x| *x == C64::new(0.0, 0.0)));
}

#[test]
#[allow(clippy::approx_constant)]
fn worst_case_examples() {
    let mut rng = common::rng(2);
    let t = random_terms(&mut rng, 10);
    let s: f64 = t.tau.iter().map(|x| x.norm()).sum();
    assert!(worst_case_gain(&t, &PhaseCodebook::new(1).unwrap()).abs() < 1e-15 * s);
    assert!((worst_case_gain(&t, &PhaseCodebook::new(2).unwrap()) - 0.70711 * s).abs() < 1e-5 * s);
}

#[test]
fn multi_user_with_identical_users_is_single() {
    let mut rng = common::rng(3);
    let cb = PhaseCodebook::new(2).unwrap();
    for _ in 0..50 {
        let t = random_terms(&mut rng, 12);
        let th = rng.random_range(0.0..2.0 * PI);
        let single = vt_select_single(&t, th, &cb);
        let multi = vt_select_multi(&[t.clone(), t.clone(), t], &[th; 3], &cb, VtFallback::SumGain, None);
        assert_eq!(single, multi);
    }
}

#[test]
fn multi_user_toy_exhaustive() {
    let mut rng = common::rng(4);
    let cb = PhaseCodebook::new(1).unwrap();
    for _ in 0..200 {
        let users = [random_terms(&mut rng, 3), random_terms(&mut rng, 3)];
        let th = [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)];
        let pick = vt_select_multi(&users, &th, &cb, VtFallback::SumGain, None);
        let tables: Vec<PriorityMatrix> = users.iter().zip(&th).map(|(u, &t)| priority_matrix(u, t, &cb)).collect();
        let singleton: Vec<Option<usize>> = (0..3)
            .map(|m| {
                let shared: Vec<usize> = (0..cb.size())
                    .filter(|&r| tables.iter().all(|t| t.table[r][m] == tables[0].table[r][m]))
                    .map(|r| tables[0].table[r][m])
                    .collect();
                (shared.len() == 1).then(|| shared[0])
            })
            .collect();
        let score = |c: &PhaseConfig| -> f64 { users.iter().zip(&th).map(|(u, &t)| u.projection(c, &cb, t)).sum() };
        let best = score(&pick);
        for c in all_configs(3, 2) {
            if singleton.iter().enumerate().all(|(m, s)| s.is_none_or(|i| c.indices[m] == i)) {
                assert!(best >= score(&c) - 1e-12);
            }
        }
    }
}

#[test]
fn multi_user_summed_gain_non_negative_on_desk_channels() {
    let mut rng = common::rng(5);
    for fallback in [VtFallback::SumGain, VtFallback::EveDisturb] {
        for _ in 0..40 {
            let scene = common::random_scene(&mut rng, 3);
            let set = los_channels(&scene, &common::channel_params()).unwrap();
            let w = common::rand_cvec(&mut rng, 8);
            let cb = PhaseCodebook::new(2).unwrap();
            let users: Vec<VtTerms> = (0..3).map(|k| vt_terms(&set, &w, k)).collect();
            let eve = vt_terms(&set, &w, 3);
            let th = [PI / 4.0; 3];
            let pick = vt_select_multi(&users, &th, &cb, fallback, Some((&eve, 1.0)));
            for m in 0..set.m() {
                let g: f64 = users.iter().map(|u| u.gain(m, &cb, pick.indices[m], PI / 4.0)).sum();
                assert!(g >= -1e-18);
            }
        }
    }
}

#[test]
fn ce_sampling_frequencies_and_determinism() {
    let p = ProbabilityMatrix::uniform(2, 5);
    let mut rng = common::rng(6);
    let s = ce_sample(&p, 10_000, &mut rng);
    for m in 0..5 {
        let ones = s.iter().filter(|c| c.indices[m] == 1).count() as f64 / 1e4;
        assert!((ones - 0.5).abs() < 0.02, "element {m}: {ones}");
    }
    let a = ce_sample(&p, 100, &mut common::rng(7));
    let b = ce_sample(&p, 100, &mut common::rng(7));
    assert_eq!(a, b);
}

/// Exponentiated-gradient ascent of the mean log-likelihood over per-column simplices.
fn simplex_mle(elites: &[PhaseConfig], q: usize) -> Vec<Vec<f64>> {
    let m = elites[0].len();
    let mut p = vec![vec![1.0 / q as f64; q]; m];
    let n: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..q).map(|i| elites.iter().filter(|e| e.indices[j] == i).count() as f64 / elites.len() as f64).collect())
        .collect();
    for _ in 0..20_000 {
        for j in 0..m {
            let mut z = 0.0;
            for i in 0..q {
                p[j][i] *= (0.05 * n[j][i] / p[j][i].max(1e-300)).exp();
                z += p[j][i];
            }
            for x in &mut p[j] {
                *x /= z;
            }
        }
    }
    p
}

#[test]
fn ce_update_matches_simplex_maximiser() {
    let mut rng = common::rng(8);
    for _ in 0..5 {
        let elites: Vec<PhaseConfig> = (0..6)
            .map(|_| PhaseConfig { indices: (0..3).map(|_| rng.random_range(0..4)).collect() })
            .collect();
        let p = ce_update(&elites, 4).unwrap();
        let oracle = simplex_mle(&elites, 4);
        for (j, col) in oracle.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                assert!((p.get(j, i) - x).abs() < 1e-6, "({j}, {i}): {} vs {x}", p.get(j, i));
            }
        }
        let q = ProbabilityMatrix::from_columns(&oracle.iter().map(|c| {
            let s: f64 = c.iter().sum();
            c.iter().map(|x| x / s).collect()
        }).collect::<Vec<_>>()).unwrap();
        assert!(p.log_likelihood(&elites) >= q.log_likelihood(&elites) - 1e-9);
    }
}

#[test]
fn ce_finds_separable_optimum() {
    let cb = PhaseCodebook::new(1).unwrap();
    let opts = CeOptions { samples: 32, elites: 8, ..CeOptions::default() };
    let mut found = 0;
    for seed in 0..20 {
        let mut rng = common::rng(100 + seed);
        let t = random_terms(&mut rng, 4);
        let f = |c: &PhaseConfig| t.projection(c, &cb, 0.3);
        let best = all_configs(4, 2).into_iter().map(|c| f(&c)).fold(f64::NEG_INFINITY, f64::max);
        let r = ce_optimize(f, &cb, 4, &opts, &mut rng).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].best_so_far >= w[0].best_so_far));
        assert!(r.iterations <= opts.max_iter);
        if r.best_value == best {
            found += 1;
        }
    }
    assert!(found >= 19, "{found}/20");
}

#[test]
fn ce_rejects_bad_options() {
    let cb = PhaseCodebook::new(1).unwrap();
    let mut rng = common::rng(9);
    let o = CeOptions { samples: 4, elites: 5, ..CeOptions::default() };
    assert!(ce_optimize(|_| 0.0, &cb, 3, &o, &mut rng).is_err());
    let o = CeOptions { max_iter: 2, ..CeOptions::default() };
    assert!(ce_optimize(|_| 0.0, &cb, 3, &o, &mut rng).is_err());
}

#[test]
fn bcd_separable_and_fixed_point() {
    let cb = PhaseCodebook::new(2).unwrap();
    let mut rng = common::rng(10);
    for _ in 0..20 {
        let t = random_terms(&mut rng, 4);
        let f = |c: &PhaseConfig| t.projection(c, &cb, 1.1);
        let best = all_configs(4, 4)
            .into_iter()
            .max_by(|a, b| f(a).total_cmp(&f(b)))
            .unwrap();
        let r = bcd_optimize(f, &cb, PhaseConfig::zeros(4), &BcdOptions::default());
        assert_eq!(r.config, best);
        assert_eq!(r.evaluations, 4 * 4);
        assert!(r.trace.windows(2).all(|w| w[1].objective >= w[0].objective));
        let again = bcd_optimize(f, &cb, best.clone(), &BcdOptions::default());
        assert_eq!(again.config, best);
    }
}

#[test]
fn hybrid_keeps_vt_optimal_base() {
    let (eval, cfg) = single_user_eval();
    let base = eval.evaluate(&PhaseConfig::zeros(eval.m()), true).unwrap();
    let c = &eval.params.constellation;
    let pick = vt_candidate(&base, c.user_phase(0), c.eve_phases[0], &eval.codebook, cfg.optimizer.vt_fallback);
    let vt_base = eval.with_fixed_weights(&base, &pick);
    let out = hybrid_vt(&eval, &vt_base, cfg.optimizer.vt_fallback, HybridMode::FixedWeights).unwrap();
    assert!(out.accepted);
    assert_eq!(out.design.config, vt_base.config);
    for mode in [HybridMode::FixedWeights, HybridMode::EveRestored, HybridMode::Reweight, HybridMode::Redesign] {
        let out = hybrid_vt(&eval, &base, cfg.optimizer.vt_fallback, mode).unwrap();
        assert!(out.design.objective >= base.objective);
        assert!(out.design.sum_rate() >= base.sum_rate());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_identity(seed in 0u64..100_000) {
        let mut rng = common::rng(seed);
        let set = los_channels(&common::random_scene(&mut rng, 2), &common::channel_params()).unwrap();
        let w = common::rand_cvec(&mut rng, set.n());
        let refl = common::unit_phasors(&mut rng, set.m());
        for g in 0..3 {
            let (bb, _) = beam_gains(&set, &refl, &w, g);
            let r = vt_terms(&set, &w, g).reconstruct(&refl);
            prop_assert!((r - bb).norm() <= 1e-10 * bb.norm().max(1e-300));
        }
    }

    #[test]
    fn vt_single_is_exhaustive_optimum(seed in 0u64..100_000, bits in 1u32..3) {
        let mut rng = common::rng(seed);
        let cb = PhaseCodebook::new(bits).unwrap();
        let t = random_terms(&mut rng, 4);
        let th = rng.random_range(0.0..2.0 * PI);
        let pick = vt_select_single(&t, th, &cb);
        let best = all_configs(4, cb.size())
            .into_iter()
            .max_by(|a, b| t.projection(a, &cb, th).total_cmp(&t.projection(b, &cb, th)).then(b.indices.cmp(&a.indices)))
            .unwrap();
        prop_assert_eq!(&pick, &best);
        prop_assert!(t.projection(&pick, &cb, th) >= worst_case_gain(&t, &cb) - 1e-12);
    }

    #[test]
    fn worst_case_monotone_in_bits(seed in 0u64..100_000) {
        let mut rng = common::rng(seed);
        let t = random_terms(&mut rng, 8);
        let v: Vec<f64> = (1..7).map(|b| worst_case_gain(&t, &PhaseCodebook::new(b).unwrap())).collect();
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn ce_columns_stay_on_simplex(seed in 0u64..100_000, alpha in 0.0..1.0f64) {
        let mut rng = common::rng(seed);
        let mut p = ProbabilityMatrix::uniform(4, 6);
        for _ in 0..5 {
            let s = ce_sample(&p, 20, &mut rng);
            p = ce_update(&s[..5], 4).unwrap().mix(&p, alpha);
            for m in 0..6 {
                let c = p.column(m);
                prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }
}
