//! Negative log-likelihood `f(w) = -(1/N) Σ_j log⟨B_j, w⟩` and its local models.
//!
//! Every derivative quantity is expressed through the per-sample inner
//! products `⟨B_j, w⟩`, cached in [`Ratios`]:
//!
//! * gradient: `g_i = -(1/N) Σ_j B_ij / ⟨B_j, w⟩`
//! * Hessian form: `∇²f(w)[d]² = (1/N) Σ_j (⟨B_j, d⟩ / ⟨B_j, w⟩)²`
//!
//! Reductions over samples use compensated summation.

use alloc::vec::Vec;
use core::ops::Deref;

use crate::basis::MixtureProblem;
use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, POSITIVITY_FLOOR};

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub const NEG_TOL: f64 = 1e-12;
    pub const SUM_TOL: f64 = 1e-10;

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Argument("weights must be nonempty"));
        }
        if w.iter().any(|x| !x.is_finite() || *x < -Self::NEG_TOL) {
            return Err(Error::Argument("weights must be finite and nonnegative"));
        }
        let s = crate::numeric::sum(w.iter().copied());
        if libm::fabs(s - 1.0) > Self::SUM_TOL {
            return Err(Error::Argument("weights must sum to one"));
        }
        Ok(Self(w))
    }

    /// Clips tiny negative entries to zero and rescales to unit sum.
    pub fn normalized(mut w: Vec<f64>) -> Result<Self> {
        for x in w.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let s = crate::numeric::sum(w.iter().copied());
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Argument("weights must have positive finite mass"));
        }
        for x in w.iter_mut() {
            *x /= s;
        }
        Self::new(w)
    }

    /// `(1/M) 1_M`
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "uniform weights need M >= 1");
        Self(alloc::vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SimplexWeights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-sample inner products `⟨B_j, w⟩` at a point with finite objective.
#[derive(Debug, Clone)]
pub struct Ratios {
    pub inner: Vec<f64>,
    pub logsum: f64,
}

impl Ratios {
    /// `f(w) = -logsum / N`
    pub fn objective(&self) -> f64 {
        -self.logsum / self.inner.len() as f64
    }
}

fn check_dim(problem: &MixtureProblem, v: &[f64]) -> Result<()> {
    if v.len() != problem.m() {
        return Err(Error::DimensionMismatch { expected: problem.m(), found: v.len() });
    }
    Ok(())
}

/// `⟨B_j, v⟩` for every sample.
pub fn inner_products(problem: &MixtureProblem, v: &[f64]) -> Vec<f64> {
    problem.columns().map(|col| col.iter().zip(v).map(|(b, x)| b * x).sum::<f64>()).collect()
}

/// Inner products at `w`, or `None` when some `⟨B_j, w⟩ ≤ 1e-300`.
pub fn ratios(problem: &MixtureProblem, w: &[f64]) -> Result<Option<Ratios>> {
    check_dim(problem, w)?;
    let inner = inner_products(problem, w);
    if inner.iter().any(|&a| !(a > POSITIVITY_FLOOR)) {
        return Ok(None);
    }
    let mut acc = CompensatedSum::new();
    for &a in &inner {
        acc.add(libm::log(a));
    }
    Ok(Some(Ratios { inner, logsum: acc.value() }))
}

/// The objective; `+inf` when some inner product is not positive.
pub fn objective(problem: &MixtureProblem, w: &[f64]) -> Result<f64> {
    Ok(ratios(problem, w)?.map_or(f64::INFINITY, |r| r.objective()))
}

fn finite_ratios(problem: &MixtureProblem, w: &[f64]) -> Result<Ratios> {
    ratios(problem, w)?.ok_or(Error::InfeasiblePoint)
}

/// `(1/N) Σ_j coef_j B_j` accumulated with one compensation term per row.
pub(crate) fn weighted_column_sum(problem: &MixtureProblem, coef: &[f64]) -> Vec<f64> {
    let m = problem.m();
    let mut acc = alloc::vec![CompensatedSum::new(); m];
    for (col, &c) in problem.columns().zip(coef) {
        if c == 0.0 {
            continue;
        }
        for (a, &b) in acc.iter_mut().zip(col) {
            a.add(b * c);
        }
    }
    let n = problem.n() as f64;
    acc.iter().map(|a| a.value() / n).collect()
}

pub fn gradient_from_ratios(problem: &MixtureProblem, r: &Ratios) -> Vec<f64> {
    let coef: Vec<f64> = r.inner.iter().map(|a| -1.0 / a).collect();
    weighted_column_sum(problem, &coef)
}

/// `∇f(w)`; errors when `f(w) = +inf`.
pub fn gradient(problem: &MixtureProblem, w: &[f64]) -> Result<Vec<f64>> {
    let r = finite_ratios(problem, w)?;
    Ok(gradient_from_ratios(problem, &r))
}

pub fn hess_form_from_ratios(problem: &MixtureProblem, r: &Ratios, d: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (col, a) in problem.columns().zip(&r.inner) {
        let bd: f64 = col.iter().zip(d).map(|(b, x)| b * x).sum();
        let u = bd / a;
        acc.add(u * u);
    }
    acc.value() / problem.n() as f64
}

/// `∇²f(w)[d]²`, the squared local Hessian norm of `d`.
pub fn hess_quadratic_form(problem: &MixtureProblem, w: &[f64], d: &[f64]) -> Result<f64> {
    check_dim(problem, d)?;
    let r = finite_ratios(problem, w)?;
    Ok(hess_form_from_ratios(problem, &r, d))
}

/// Hessian-vector product `∇²f(w) d = (1/N) Σ_j B_j ⟨B_j, d⟩ / ⟨B_j, w⟩²`.
pub fn hess_vec_from_ratios(problem: &MixtureProblem, r: &Ratios, d: &[f64]) -> Vec<f64> {
    let coef: Vec<f64> = problem
        .columns()
        .zip(&r.inner)
        .map(|(col, a)| col.iter().zip(d).map(|(b, x)| b * x).sum::<f64>() / (a * a))
        .collect();
    weighted_column_sum(problem, &coef)
}

fn diff(y: &[f64], w: &[f64]) -> Vec<f64> {
    y.iter().zip(w).map(|(a, b)| a - b).collect()
}

/// Second-order model `Φ_f(y, w) = f(w) + ⟨∇f(w), y-w⟩ + ½ ∇²f(w)[y-w]²`.
pub fn local_model(problem: &MixtureProblem, y: &[f64], w: &[f64]) -> Result<f64> {
    check_dim(problem, y)?;
    let r = finite_ratios(problem, w)?;
    let g = gradient_from_ratios(problem, &r);
    let d = diff(y, w);
    Ok(r.objective() + crate::numeric::dot(&g, &d) + 0.5 * hess_form_from_ratios(problem, &r, &d))
}

/// Cubic-regularized model `h_f(y, w) = Φ_f(y, w) + (L/6) ‖y-w‖³_{∇²f(w)}`.
pub fn cubic_model(problem: &MixtureProblem, y: &[f64], w: &[f64], l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Argument("regularization L must be positive"));
    }
    check_dim(problem, y)?;
    let r = finite_ratios(problem, w)?;
    let g = gradient_from_ratios(problem, &r);
    let d = diff(y, w);
    let q = hess_form_from_ratios(problem, &r, &d);
    Ok(r.objective() + crate::numeric::dot(&g, &d) + 0.5 * q + l / 6.0 * q * libm::sqrt(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn diag2() -> MixtureProblem {
        MixtureProblem::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap()
    }

    #[test]
    fn objective_examples() {
        let ones = MixtureProblem::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(objective(&ones, &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(objective(&diag2(), &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(objective(&diag2(), &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(matches!(objective(&diag2(), &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gradient_examples() {
        let ones = MixtureProblem::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(gradient(&ones, &[0.5, 0.5]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(gradient(&diag2(), &[0.5, 0.5]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(gradient(&diag2(), &[1.0, 0.0]), Err(Error::InfeasiblePoint));
    }

    #[test]
    fn hessian_form_examples() {
        assert_eq!(hess_quadratic_form(&diag2(), &[0.5, 0.5], &[0.0, 0.0]).unwrap(), 0.0);
        assert!((hess_quadratic_form(&diag2(), &[0.5, 0.5], &[1.0, -1.0]).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn model_examples() {
        let p = diag2();
        let w = [0.5, 0.5];
        assert_eq!(local_model(&p, &w, &w).unwrap(), 0.0);
        assert!((local_model(&p, &[0.75, 0.25], &w).unwrap() - 0.125).abs() < 1e-15);
        assert!((cubic_model(&p, &[0.75, 0.25], &w, 6.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(cubic_model(&p, &w, &w, 3.0).unwrap(), 0.0);
        assert!(matches!(cubic_model(&p, &w, &w, 0.0), Err(Error::Argument(_))));
        let tiny = cubic_model(&p, &[0.75, 0.25], &w, 1e-300).unwrap();
        assert!((tiny - 0.125).abs() < 1e-15);
    }

    #[test]
    fn simplex_weights_validation() {
        assert!(SimplexWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexWeights::new(vec![1.0 + 1e-11, -1e-11]).is_err());
        assert!(SimplexWeights::new(vec![0.5 + 5e-11, 0.5]).is_ok());
        assert!(SimplexWeights::new(vec![0.6, 0.6]).is_err());
        let w = SimplexWeights::normalized(vec![2.0, -1e-18, 2.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.0, 0.5]);
    }
}
