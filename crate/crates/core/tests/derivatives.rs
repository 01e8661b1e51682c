mod common;

use common::{random_bernstein, random_interior, random_matrix, standard_normal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use shapemix_core::objective::{gradient, hess_quadratic_form, objective};
use shapemix_core::MixtureProblem;

fn shifted(w: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    w.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

fn random_instance(rng: &mut ChaCha20Rng) -> MixtureProblem {
    let m = rng.gen_range(2..=20);
    let n = rng.gen_range(1..=100);
    if rng.gen_bool(0.5) {
        random_matrix(rng, m, n)
    } else {
        random_bernstein(rng, m, n)
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    for _ in 0..50 {
        let p = random_instance(&mut rng);
        let w = random_interior(&mut rng, p.m(), 0.5);
        let g = gradient(&p, &w).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..p.m())
            .map(|i| {
                let mut e = vec![0.0; p.m()];
                e[i] = 1.0;
                (objective(&p, &shifted(&w, &e, h)).unwrap() - objective(&p, &shifted(&w, &e, -h)).unwrap()) / (2.0 * h)
            })
            .collect();
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6 * scale, "err {err} scale {scale}");
    }
}

#[test]
fn hessian_form_matches_second_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    for _ in 0..50 {
        let p = random_instance(&mut rng);
        let w = random_interior(&mut rng, p.m(), 0.5);
        let d: Vec<f64> = (0..p.m()).map(|_| standard_normal(&mut rng) / p.m() as f64).collect();
        let q = hess_quadratic_form(&p, &w, &d).unwrap();
        let h = 1e-4;
        let f0 = objective(&p, &w).unwrap();
        let fd = (objective(&p, &shifted(&w, &d, h)).unwrap() - 2.0 * f0
            + objective(&p, &shifted(&w, &d, -h)).unwrap())
            / (h * h);
        assert!((q - fd).abs() <= 1e-5 * q.abs().max(1e-3), "{q} vs {fd}");
    }
}

#[test]
fn third_derivative_obeys_self_concordance() {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 200 {
        let p = random_instance(&mut rng);
        let w = random_interior(&mut rng, p.m(), 0.5);
        // sparse directions push |D3| close to the bound
        let mut u: Vec<f64> = (0..p.m()).map(|_| standard_normal(&mut rng)).collect();
        if checked % 2 == 0 {
            let keep = rng.gen_range(0..p.m());
            u.iter_mut().enumerate().for_each(|(i, x)| {
                if i != keep {
                    *x *= 1e-3
                }
            });
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x *= 0.1 / norm);
        let h = 1e-5;
        let d2 = hess_quadratic_form(&p, &w, &u).unwrap();
        let d3 = (hess_quadratic_form(&p, &shifted(&w, &u, h), &u).unwrap()
            - hess_quadratic_form(&p, &shifted(&w, &u, -h), &u).unwrap())
            / (2.0 * h);
        let bound = 2.0 * (p.n() as f64).sqrt() * d2.powf(1.5);
        assert!(d3.abs() <= bound * (1.0 + 1e-3), "|D3| = {} > {bound}", d3.abs());
        checked += 1;
    }
}

#[test]
fn objective_is_convex_along_segments() {
    let mut rng = ChaCha20Rng::seed_from_u64(24);
    for _ in 0..100 {
        let p = random_instance(&mut rng);
        let a = random_interior(&mut rng, p.m(), 0.1);
        let b = random_interior(&mut rng, p.m(), 0.1);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let fm = objective(&p, &mid).unwrap();
        let avg = 0.5 * (objective(&p, &a).unwrap() + objective(&p, &b).unwrap());
        assert!(fm <= avg + 1e-14);
    }
}
