mod common;

use common::{random_bernstein, random_matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use shapemix_core::cubic_newton::fit_unimodal;
use shapemix_core::objective::objective;
use shapemix_core::reference::em_solve;
use shapemix_core::{minimize, MixtureProblem, Shape, ShapeConstraint, SolveResult, SolverConfig, Status};

fn all_shapes(m: usize) -> Vec<Shape> {
    let mut s = Shape::ALL_FIXED.to_vec();
    s.push(Shape::UnimodalFixed(m.div_ceil(2)));
    s
}

fn check_trace(p: &MixtureProblem, r: &SolveResult, cfg: &SolverConfig) {
    let bound = (48.0 * p.n() as f64).max(cfg.l0);
    for rec in &r.trace.records {
        assert!(rec.l <= bound, "L = {} > {bound}", rec.l);
    }
    for pair in r.trace.records.windows(2) {
        assert!(pair[1].f <= pair[0].f + 1e-14, "{pair:?}");
    }
}

fn random_feasible(rng: &mut ChaCha20Rng, c: &ShapeConstraint) -> Vec<f64> {
    let vs = c.enumerate_vertices();
    let lam: Vec<f64> = vs.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = lam.iter().sum();
    let mut w = vec![0.0; c.m()];
    for (l, v) in lam.iter().zip(&vs) {
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi += l / s * vi;
        }
    }
    w
}

#[test]
fn simplex_fit_agrees_with_em() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let cfg = SolverConfig { gap_tol: 1e-9, ..SolverConfig::default() };
    for _ in 0..10 {
        let m = rng.gen_range(2..=12);
        let n = rng.gen_range(20..=200);
        let p = random_bernstein(&mut rng, m, n);
        let r = minimize(&p, &ShapeConstraint::simplex(m), &cfg, None).unwrap();
        assert!(matches!(r.status(), Status::Converged | Status::SmallChange), "{:?}", r.status());
        check_trace(&p, &r, &cfg);
        let em = em_solve(&p, 1e-13, 200_000).unwrap();
        let f_em = objective(&p, em.w.as_slice()).unwrap();
        // the gap bounds how far the solver can sit above the optimum
        assert!(r.f - f_em <= r.fw_gap + 1e-14, "{} vs {f_em}", r.f);
        assert!(f_em - r.f <= 1e-6 * r.f.abs().max(1.0), "{} vs {f_em}", r.f);
    }
}

#[test]
fn constrained_fits_beat_random_feasible_points() {
    let mut rng = ChaCha20Rng::seed_from_u64(32);
    let cfg = SolverConfig::default();
    for m in [2, 3, 5, 8] {
        let p = random_matrix(&mut rng, m, 60);
        for shape in all_shapes(m) {
            let c = ShapeConstraint::new(shape, m).unwrap();
            let r = minimize(&p, &c, &cfg, None).unwrap();
            assert_eq!(r.status(), Status::Converged, "{shape:?} M={m}");
            assert!(c.contains(r.w.as_slice(), 1e-9));
            assert!(r.fw_gap <= cfg.gap_tol * r.f.abs().max(1.0));
            check_trace(&p, &r, &cfg);
            for _ in 0..200 {
                let w = random_feasible(&mut rng, &c);
                assert!(r.f <= objective(&p, &w).unwrap() + r.fw_gap);
            }
        }
    }
}

#[test]
fn nested_constraints_order_the_optima() {
    // concave-increasing ⊂ concave ⊂ simplex
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let p = random_bernstein(&mut rng, 10, 300);
    let cfg = SolverConfig { gap_tol: 1e-9, ..SolverConfig::default() };
    let f = |shape| minimize(&p, &ShapeConstraint::new(shape, 10).unwrap(), &cfg, None).unwrap().f;
    let (fs, fc, fci) = (f(Shape::Simplex), f(Shape::Concave), f(Shape::ConcaveIncreasing));
    assert!(fs <= fc + 1e-8 && fc <= fci + 1e-8, "{fs} {fc} {fci}");
}

#[test]
fn unimodal_search_picks_the_best_mode() {
    let mut rng = ChaCha20Rng::seed_from_u64(34);
    let p = random_bernstein(&mut rng, 7, 150);
    let u = fit_unimodal(&p, &SolverConfig::default()).unwrap();
    assert_eq!(u.per_mode_f.len(), 7);
    for f in &u.per_mode_f {
        assert!(u.result.f <= f + 1e-12);
    }
    assert_eq!(u.result.f, u.per_mode_f[u.k_star - 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_invariants_hold(seed in any::<u64>(), m in 1usize..8, n in 1usize..80, shape_ix in 0usize..10) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let p = random_matrix(&mut rng, m, n);
        let shape = if shape_ix < 9 { Shape::ALL_FIXED[shape_ix] } else { Shape::UnimodalFixed(1 + seed as usize % m) };
        let c = ShapeConstraint::new(shape, m).unwrap();
        let cfg = SolverConfig::default();
        let r = minimize(&p, &c, &cfg, None).unwrap();
        prop_assert!(c.contains(r.w.as_slice(), 1e-9));
        prop_assert!(r.trace.status != Status::IterationCapped);
        let bound = (48.0 * n as f64).max(cfg.l0);
        prop_assert!(r.trace.records.iter().all(|rec| rec.l <= bound));
        prop_assert!(r.trace.records.windows(2).all(|w| w[1].f <= w[0].f + 1e-14));
        prop_assert_eq!(objective(&p, r.w.as_slice()).unwrap(), r.f);
    }
}

fn tail_ratios(p: &MixtureProblem, c: &ShapeConstraint, cfg: &SolverConfig, star: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let iters = minimize(p, c, cfg, None).unwrap().trace.outer_iters();
    let errors: Vec<f64> = (1..=iters)
        .map(|k| {
            let r = minimize(p, c, &SolverConfig { max_outer: k, ..*cfg }, None).unwrap();
            r.w.as_slice().iter().zip(star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .collect();
    let tail = &errors[errors.len().saturating_sub(4)..];
    let ratios = tail.windows(2).map(|e| e[1] / (e[0] * e[0])).collect();
    (errors, ratios)
}

#[test]
fn local_convergence_ratios_are_reported() {
    // e_{k+1} / e_k^2 over the last iterations; the constants are printed, not asserted
    let mut rng = ChaCha20Rng::seed_from_u64(35);
    let p = random_matrix(&mut rng, 10, 500);
    let c = ShapeConstraint::simplex(10);
    let tight = SolverConfig { gap_tol: 1e-15, outer_tol: 1e-16, ..SolverConfig::default() };
    let star = minimize(&p, &c, &tight, None).unwrap();
    let sci = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    for (label, cfg) in [
        ("default", SolverConfig::default()),
        ("full steps", SolverConfig { shorter_step_iters: 0, gap_tol: 1e-10, ..SolverConfig::default() }),
    ] {
        let (errors, ratios) = tail_ratios(&p, &c, &cfg, star.w.as_slice());
        eprintln!("{label}: errors {}\n{label}: ratios {}", sci(&errors), sci(&ratios));
        assert!(*errors.last().unwrap() < 1e-3);
    }
}
