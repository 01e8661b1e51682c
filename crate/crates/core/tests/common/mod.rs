#![allow(dead_code)]

use rand::Rng;
use shapemix_core::basis::bernstein_matrix;
use shapemix_core::MixtureProblem;

/// Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Dense positive matrix with entries in `[0.01, 2)`.
pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, n: usize) -> MixtureProblem {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.01..2.0)).collect()).collect();
    MixtureProblem::from_rows(&rows).unwrap()
}

/// Bernstein evaluation matrix at uniform samples.
pub fn random_bernstein<R: Rng>(rng: &mut R, m: usize, n: usize) -> MixtureProblem {
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    bernstein_matrix(&xs, m).unwrap()
}

/// Random point of the simplex with every coordinate at least `floor / M`.
pub fn random_interior<R: Rng>(rng: &mut R, m: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| (1.0 - floor) * x / s + floor / m as f64).collect()
}
