//! Slow, independent oracles for testing: the EM fixed-point iteration for
//! simplex-constrained mixture weights, and vertex enumeration of a shape
//! polytope from its inequality description.

use alloc::vec::Vec;

use crate::basis::MixtureProblem;
use crate::error::{Error, Result};
use crate::numeric::{dot_unrolled, rank, solve_dense, POSITIVITY_FLOOR};
use crate::objective::{self, SimplexWeights};
use crate::polytope::ShapeConstraint;

/// EM drops weights below this to exactly zero; from there they could not
/// regain mass within any realistic iteration budget.
pub const EM_DEAD_WEIGHT: f64 = 1e-150;

/// `2^500`; inner products are formed against `w · EM_SCALE` so that no
/// product of a live weight and a normal matrix entry is subnormal.
const EM_SCALE: f64 = 3.273_390_607_896_142e150;

/// `w'_i = w_i · (1/N) Σ_j B_ij / ⟨B_j, w⟩`, renormalized.
pub fn em_step(problem: &MixtureProblem, w: &SimplexWeights) -> Result<SimplexWeights> {
    if w.len() != problem.m() {
        return Err(Error::DimensionMismatch { expected: problem.m(), found: w.len() });
    }
    if w.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Argument("EM needs strictly positive weights"));
    }
    let mut next = w.to_vec();
    let mut ws = EmScratch::new(problem);
    ws.update(problem, &mut next)?;
    SimplexWeights::normalized(next)
}

struct EmScratch {
    scale: f64,
    scaled: Vec<f64>,
    r: Vec<f64>,
}

impl EmScratch {
    fn new(problem: &MixtureProblem) -> Self {
        let m = problem.m();
        let max_entry = problem.columns().flat_map(|c| c.iter()).fold(0.0f64, |a, b| a.max(*b));
        let scale = if max_entry * m as f64 <= 1e150 { EM_SCALE } else { 1.0 };
        Self { scale, scaled: alloc::vec![0.0; m], r: alloc::vec![0.0; m] }
    }

    /// One in-place EM update; plain (uncompensated) sums keep it fast.
    fn update(&mut self, problem: &MixtureProblem, w: &mut [f64]) -> Result<()> {
        for (s, x) in self.scaled.iter_mut().zip(w.iter_mut()) {
            if *x < EM_DEAD_WEIGHT {
                *x = 0.0;
            }
            *s = *x * self.scale;
        }
        self.r.iter_mut().for_each(|x| *x = 0.0);
        let m = problem.m();
        let inv_of = |col: &[f64], scaled: &[f64], scale: f64| -> Result<f64> {
            let a = dot_unrolled(col, scaled) / scale;
            if !(a > POSITIVITY_FLOOR) {
                return Err(Error::InfeasiblePoint);
            }
            Ok(1.0 / a)
        };
        // four columns per pass over r
        let mut blocks = problem.columns_flat().chunks_exact(4 * m);
        for block in &mut blocks {
            let (c0, rest) = block.split_at(m);
            let (c1, rest) = rest.split_at(m);
            let (c2, c3) = rest.split_at(m);
            let i0 = inv_of(c0, &self.scaled, self.scale)?;
            let i1 = inv_of(c1, &self.scaled, self.scale)?;
            let i2 = inv_of(c2, &self.scaled, self.scale)?;
            let i3 = inv_of(c3, &self.scaled, self.scale)?;
            for (i, ri) in self.r.iter_mut().enumerate() {
                *ri += (c0[i] * i0 + c1[i] * i1) + (c2[i] * i2 + c3[i] * i3);
            }
        }
        for col in blocks.remainder().chunks_exact(m) {
            let inv = inv_of(col, &self.scaled, self.scale)?;
            for (ri, b) in self.r.iter_mut().zip(col) {
                *ri += b * inv;
            }
        }
        let n = problem.n() as f64;
        let mut s = 0.0;
        for (x, ri) in w.iter_mut().zip(&self.r) {
            *x *= ri / n;
            s += *x;
        }
        w.iter_mut().for_each(|x| *x /= s);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EmState {
    pub w: SimplexWeights,
    pub iters: usize,
    /// `max_i |w'_i - w_i|` of the last update.
    pub last_update_norm: f64,
    pub converged: bool,
}

/// Runs EM from the uniform vector until `max_i |Δw_i| < tol` or `max_iters`.
pub fn em_solve(problem: &MixtureProblem, tol: f64, max_iters: usize) -> Result<EmState> {
    em_solve_observed(problem, tol, max_iters, &mut |_, _| {})
}

/// [`em_solve`] with a callback receiving `(iteration, w)` after each update.
pub fn em_solve_observed(
    problem: &MixtureProblem,
    tol: f64,
    max_iters: usize,
    observe: &mut dyn FnMut(usize, &[f64]),
) -> Result<EmState> {
    if !(tol > 0.0) {
        return Err(Error::Argument("EM tolerance must be positive"));
    }
    let m = problem.m();
    let mut w = alloc::vec![1.0 / m as f64; m];
    let mut prev = w.clone();
    let mut ws = EmScratch::new(problem);
    let mut state =
        EmState { w: SimplexWeights::uniform(m), iters: 0, last_update_norm: f64::INFINITY, converged: false };
    while state.iters < max_iters {
        prev.copy_from_slice(&w);
        ws.update(problem, &mut w)?;
        state.iters += 1;
        state.last_update_norm = w.iter().zip(&prev).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
        observe(state.iters, &w);
        if state.last_update_norm < tol {
            state.converged = true;
            break;
        }
    }
    state.w = SimplexWeights::normalized(w)?;
    Ok(state)
}

/// All vertices of `constraint` found by solving every square system of
/// `M - 1` tight inequalities plus `Σ w = 1`. Exponential; `M ≤ 5` only.
pub fn brute_force_vertices(constraint: &ShapeConstraint) -> Result<Vec<Vec<f64>>> {
    let m = constraint.m();
    if m > 5 {
        return Err(Error::Argument("brute-force enumeration supports M <= 5"));
    }
    let rows = constraint.inequality_rows();
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..m - 1).collect();
    loop {
        let mut a = Vec::with_capacity(m * m);
        for &i in &subset {
            a.extend_from_slice(&rows[i]);
        }
        a.extend(core::iter::repeat_n(1.0, m));
        let mut b = alloc::vec![0.0; m];
        b[m - 1] = 1.0;
        if rank(&a, m, m, 1e-12) == m {
            if let Some(x) = solve_dense(&a, &b, m, 1e-12) {
                let feasible = rows.iter().all(|r| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() >= -1e-10);
                let fresh = !found.iter().any(|v| v.iter().zip(&x).all(|(p, q)| libm::fabs(p - q) <= 1e-10));
                if feasible && fresh {
                    found.push(x);
                }
            }
        }
        if !next_combination(&mut subset, rows.len()) {
            break;
        }
    }
    Ok(found)
}

/// Advances a sorted index subset to the next one in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `f` at the EM solution; convenience for tests that need a reference value.
pub fn em_reference_objective(problem: &MixtureProblem, tol: f64, max_iters: usize) -> Result<f64> {
    let st = em_solve(problem, tol, max_iters)?;
    objective::objective(problem, &st.w)
}
