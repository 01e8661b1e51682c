//! Away-step Frank-Wolfe for the cubic-regularized Newton subproblem
//!
//! ```text
//! min_{y ∈ C} h(y) = f(w) + ⟨∇f(w), y-w⟩ + ½ q(y-w) + (L/6) q(y-w)^{3/2},
//! q(d) = ∇²f(w)[d]²
//! ```
//!
//! With `a_j = ⟨B_j, w⟩` fixed, the model only sees the per-sample ratios
//! `t_j = ⟨B_j, z⟩ / a_j`: `q(z-w) = mean((t_j - 1)²)` and
//! `∇²f(w) z = (1/N) Σ_j B_j t_j / a_j`. Each active vertex caches its own
//! ratios and Hessian product, so an iteration costs `O(N + M |A|)` and the
//! line search along `d` works from three scalars.

use alloc::vec::Vec;

use crate::basis::MixtureProblem;
use crate::error::{Error, Result};
use crate::numeric::{dot, CompensatedSum};
use crate::objective::{self, weighted_column_sum, SimplexWeights};
use crate::polytope::{ShapeConstraint, VertexId};

/// Weights below this are treated as zero and removed.
const DROP_EPS: f64 = 1e-300;
/// Iterations between exact re-synchronizations of the cached iterate.
const RESYNC_EVERY: usize = 50;

/// Sparse convex combination of vertices plus the dense point it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    entries: Vec<(VertexId, f64)>,
    z: Vec<f64>,
}

impl ActiveSet {
    pub fn vertex(constraint: &ShapeConstraint, id: VertexId) -> Result<Self> {
        Self::from_entries(constraint, alloc::vec![(id, 1.0)])
    }

    /// Validates ids and weights, merges duplicates and rescales to unit sum.
    pub fn from_entries(constraint: &ShapeConstraint, entries: Vec<(VertexId, f64)>) -> Result<Self> {
        let mut merged: Vec<(VertexId, f64)> = Vec::with_capacity(entries.len());
        for (id, l) in entries {
            if !constraint.is_valid_id(id) {
                return Err(Error::Argument("active set contains a vertex outside the constraint"));
            }
            if !l.is_finite() || l < 0.0 {
                return Err(Error::Argument("active set weights must be finite and nonnegative"));
            }
            if l <= DROP_EPS {
                continue;
            }
            match merged.iter_mut().find(|(m, _)| *m == id) {
                Some(e) => e.1 += l,
                None => merged.push((id, l)),
            }
        }
        let s = crate::numeric::sum(merged.iter().map(|e| e.1));
        if merged.is_empty() || libm::fabs(s - 1.0) > 1e-10 {
            return Err(Error::Argument("active set weights must sum to one"));
        }
        merged.iter_mut().for_each(|e| e.1 /= s);
        let mut set = Self { entries: merged, z: Vec::new() };
        set.z = set.reconstruct(constraint);
        Ok(set)
    }

    /// Single-vertex start at the linear minimizer of `∇f(w_center)`.
    pub fn default_start(problem: &MixtureProblem, w_center: &[f64], constraint: &ShapeConstraint) -> Result<Self> {
        let g = objective::gradient(problem, w_center)?;
        let (id, _) = constraint.lp_oracle(&g)?;
        Self::vertex(constraint, id)
    }

    pub fn entries(&self) -> &[(VertexId, f64)] {
        &self.entries
    }

    /// The dense point `z = Σ λ_v v`.
    pub fn iterate(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, id: VertexId) -> f64 {
        self.entries.iter().find(|e| e.0 == id).map_or(0.0, |e| e.1)
    }

    /// Recomputes `Σ λ_v v` from the vertex catalog.
    pub fn reconstruct(&self, constraint: &ShapeConstraint) -> Vec<f64> {
        let m = constraint.m();
        let mut acc = alloc::vec![CompensatedSum::new(); m];
        let mut v = alloc::vec![0.0; m];
        for &(id, l) in &self.entries {
            constraint.write_vertex(id, &mut v).expect("ids validated on construction");
            for (a, x) in acc.iter_mut().zip(&v) {
                a.add(l * x);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// `(1-t)·self + t·other`.
    pub fn combine(&self, other: &ActiveSet, t: f64, constraint: &ShapeConstraint) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Argument("combination weight must lie in [0, 1]"));
        }
        let entries = self
            .entries
            .iter()
            .map(|&(id, l)| (id, (1.0 - t) * l))
            .chain(other.entries.iter().map(|&(id, l)| (id, t * l)))
            .collect();
        Self::from_entries(constraint, entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Stop once `|h_prev - h| / max(|h_prev|, 1)` falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// The relative-change test only fires once the model FW gap is at most
    /// this value.
    pub gap_floor: f64,
}

impl StoppingRule {
    pub fn relative(tol: f64, max_iters: usize) -> Self {
        Self { tol, max_iters, gap_floor: f64::INFINITY }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self::relative(1e-8, 50_000)
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub y: SimplexWeights,
    pub active: ActiveSet,
    /// `max_{v ∈ C} ⟨∇h(y), y - v⟩`
    pub fw_gap: f64,
    pub iters: usize,
    /// `h(y)`
    pub objective: f64,
    pub capped: bool,
    /// The iterate violated `h(y) ≤ f(w_center)` and `w_center` was returned.
    /// `active` then holds a decomposition of `w_center` when one is cheaply
    /// available and the start set otherwise.
    pub fell_back: bool,
}

/// Quantities fixed by the expansion point.
struct Center<'a> {
    problem: &'a MixtureProblem,
    inv_a: Vec<f64>,
    g: Vec<f64>,
    f0: f64,
    gw: f64,
    l: f64,
}

impl<'a> Center<'a> {
    fn new(problem: &'a MixtureProblem, w: &[f64], l: f64) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::Argument("regularization L must be finite and nonnegative"));
        }
        let r = objective::ratios(problem, w)?.ok_or(Error::InfeasiblePoint)?;
        let g = objective::gradient_from_ratios(problem, &r);
        let gw = dot(&g, w);
        Ok(Self { problem, inv_a: r.inner.iter().map(|a| 1.0 / a).collect(), f0: r.objective(), g, gw, l })
    }

    /// `⟨B_j, v⟩ / a_j` for every sample.
    fn ratios_of(&self, v: &[f64]) -> Vec<f64> {
        let lo = v.iter().position(|x| *x != 0.0).unwrap_or(0);
        let hi = v.iter().rposition(|x| *x != 0.0).map_or(0, |i| i + 1);
        self.problem
            .columns()
            .zip(&self.inv_a)
            .map(|(col, ia)| col[lo..hi].iter().zip(&v[lo..hi]).map(|(b, x)| b * x).sum::<f64>() * ia)
            .collect()
    }

    /// `∇²f(w) v` from the ratios of `v`.
    fn hess_of(&self, t: &[f64]) -> Vec<f64> {
        let coef: Vec<f64> = t.iter().zip(&self.inv_a).map(|(t, ia)| t * ia).collect();
        weighted_column_sum(self.problem, &coef)
    }

    fn vertex(&self, constraint: &ShapeConstraint, id: VertexId) -> VertexData {
        let v = constraint.vertex_vector(id).expect("valid id");
        let t = self.ratios_of(&v);
        let hv = self.hess_of(&t);
        VertexData { v, t, hv }
    }

    /// `q(z - w)` from the ratios of `z`.
    fn q0(&self, t: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for x in t {
            let u = x - 1.0;
            acc.add(u * u);
        }
        (acc.value() / t.len() as f64).max(0.0)
    }

    fn model_value(&self, z: &[f64], q0: f64) -> f64 {
        self.f0 + (dot(&self.g, z) - self.gw) + 0.5 * q0 + self.l / 6.0 * q0 * libm::sqrt(q0)
    }

    /// `∇h(z) = g + (1 + (L/2)√q0)(∇²f(w) z + g)`, using `∇²f(w) w = -g`.
    fn model_gradient(&self, hz: &[f64], q0: f64) -> Vec<f64> {
        let c = 1.0 + 0.5 * self.l * libm::sqrt(q0);
        self.g.iter().zip(hz).map(|(g, h)| g + c * (h + g)).collect()
    }
}

struct VertexData {
    v: Vec<f64>,
    t: Vec<f64>,
    hv: Vec<f64>,
}

/// Working state: weights, per-vertex caches and the cached iterate.
struct State {
    entries: Vec<(VertexId, f64)>,
    data: Vec<VertexData>,
    z: Vec<f64>,
    t: Vec<f64>,
    hz: Vec<f64>,
}

impl State {
    fn resync(&mut self) {
        let s: f64 = crate::numeric::sum(self.entries.iter().map(|e| e.1));
        self.entries.iter_mut().for_each(|e| e.1 /= s);
        let combine = |field: fn(&VertexData) -> &[f64], len: usize| {
            let mut acc = alloc::vec![CompensatedSum::new(); len];
            for ((_, l), d) in self.entries.iter().zip(&self.data) {
                for (a, x) in acc.iter_mut().zip(field(d)) {
                    a.add(l * x);
                }
            }
            acc.iter().map(|a| a.value()).collect::<Vec<f64>>()
        };
        let z = combine(|d| &d.v, self.z.len());
        let t = combine(|d| &d.t, self.t.len());
        let hz = combine(|d| &d.hv, self.hz.len());
        self.z = z;
        self.t = t;
        self.hz = hz;
    }

    fn remove(&mut self, idx: usize) {
        self.entries.swap_remove(idx);
        self.data.swap_remove(idx);
    }

    fn prune(&mut self) -> bool {
        let mut dropped = false;
        let mut i = 0;
        while i < self.entries.len() {
            if self.entries[i].1 <= DROP_EPS {
                self.remove(i);
                dropped = true;
            } else {
                i += 1;
            }
        }
        dropped
    }
}

/// Approximately minimizes the cubic model over `constraint`, starting from
/// `start` (default: [`ActiveSet::default_start`]).
pub fn solve_subproblem(
    problem: &MixtureProblem,
    w_center: &[f64],
    l: f64,
    constraint: &ShapeConstraint,
    start: Option<ActiveSet>,
    stop: StoppingRule,
) -> Result<SubproblemResult> {
    solve_observed(problem, w_center, l, constraint, start, stop, &mut |_| {})
}

fn solve_observed(
    problem: &MixtureProblem,
    w_center: &[f64],
    l: f64,
    constraint: &ShapeConstraint,
    start: Option<ActiveSet>,
    stop: StoppingRule,
    observe: &mut dyn FnMut(f64),
) -> Result<SubproblemResult> {
    let m = problem.m();
    if w_center.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: w_center.len() });
    }
    if constraint.m() != m {
        return Err(Error::DimensionMismatch { expected: m, found: constraint.m() });
    }
    let center = Center::new(problem, w_center, l)?;
    let start = match start {
        Some(s) => {
            if s.entries.iter().any(|e| !constraint.is_valid_id(e.0)) || s.z.len() != m {
                return Err(Error::Argument("start active set does not belong to the constraint"));
            }
            s
        }
        None => ActiveSet::default_start(problem, w_center, constraint)?,
    };

    let start_copy = start.clone();
    let data: Vec<VertexData> = start.entries.iter().map(|e| center.vertex(constraint, e.0)).collect();
    let mut st = State {
        entries: start.entries.clone(),
        data,
        z: alloc::vec![0.0; m],
        t: alloc::vec![0.0; problem.n()],
        hz: alloc::vec![0.0; m],
    };
    st.resync();
    let mut q0 = center.q0(&st.t);
    let mut h = center.model_value(&st.z, q0);
    observe(h);

    let mut iters = 0;
    let mut capped = false;
    let mut small_change = false;
    loop {
        if iters >= stop.max_iters {
            capped = true;
            break;
        }
        let grad = center.model_gradient(&st.hz, q0);
        let (s_id, s_val) = constraint.lp_oracle(&grad)?;
        let gz = dot(&grad, &st.z);
        let fw_gap = gz - s_val;
        if !(fw_gap > 0.0) || (small_change && fw_gap <= stop.gap_floor) {
            break;
        }
        let (v_idx, v_val) = away_vertex(&st, &grad);
        let away_gap = v_val - gz;
        let fw_step = fw_gap > away_gap || st.entries.len() == 1;

        // direction ratios e_j and its gradient inner product, then the line search
        let gz_f = dot(&center.g, &st.z);
        let (e, gd, alpha_max, s_idx) = if fw_step {
            let idx = match st.entries.iter().position(|x| x.0 == s_id) {
                Some(i) => i,
                None => {
                    st.entries.push((s_id, 0.0));
                    st.data.push(center.vertex(constraint, s_id));
                    st.entries.len() - 1
                }
            };
            let d = &st.data[idx];
            let e: Vec<f64> = d.t.iter().zip(&st.t).map(|(a, b)| a - b).collect();
            (e, dot(&center.g, &d.v) - gz_f, 1.0, idx)
        } else {
            let d = &st.data[v_idx];
            let lam = st.entries[v_idx].1;
            let e: Vec<f64> = st.t.iter().zip(&d.t).map(|(a, b)| a - b).collect();
            (e, gz_f - dot(&center.g, &d.v), lam / (1.0 - lam), v_idx)
        };
        let (q1, q2) = direction_forms(&st.t, &e);
        let alpha = line_search_coeffs(gd, q0, q1, q2, l, alpha_max);
        if !(alpha > 0.0) {
            st.prune();
            break;
        }
        let q_new = (q0 + 2.0 * alpha * q1 + alpha * alpha * q2).max(0.0);
        let dh = alpha * gd
            + alpha * q1
            + 0.5 * alpha * alpha * q2
            + l / 6.0 * (q_new * libm::sqrt(q_new) - q0 * libm::sqrt(q0));

        let at_max = alpha >= alpha_max;
        if fw_step {
            for (i, e) in st.entries.iter_mut().enumerate() {
                e.1 *= 1.0 - alpha;
                if i == s_idx {
                    e.1 += alpha;
                }
            }
            if at_max {
                st.entries.iter_mut().enumerate().for_each(|(i, e)| e.1 = if i == s_idx { 1.0 } else { 0.0 });
            }
            let d = &st.data[s_idx];
            axpy_toward(&mut st.z, &d.v, alpha);
            axpy_toward(&mut st.t, &d.t, alpha);
            axpy_toward(&mut st.hz, &d.hv, alpha);
        } else {
            for (i, e) in st.entries.iter_mut().enumerate() {
                e.1 = if i == s_idx { (1.0 + alpha) * e.1 - alpha } else { (1.0 + alpha) * e.1 };
            }
            if at_max {
                st.entries[s_idx].1 = 0.0;
            }
            let d = &st.data[s_idx];
            axpy_toward(&mut st.z, &d.v, -alpha);
            axpy_toward(&mut st.t, &d.t, -alpha);
            axpy_toward(&mut st.hz, &d.hv, -alpha);
        }
        let dropped = st.prune();
        iters += 1;
        if dropped || iters % RESYNC_EVERY == 0 {
            st.resync();
        }
        q0 = center.q0(&st.t);
        let h_prev = h;
        h = if iters % RESYNC_EVERY == 0 { center.model_value(&st.z, q0) } else { h + dh };
        observe(h);
        small_change = !dropped && libm::fabs(h_prev - h) / libm::fabs(h_prev).max(1.0) < stop.tol;
    }

    st.resync();
    q0 = center.q0(&st.t);
    let h_final = center.model_value(&st.z, q0);
    let active = ActiveSet { entries: st.entries, z: st.z };

    if !(h_final <= center.f0) {
        let w = SimplexWeights::normalized(w_center.to_vec())?;
        let fallback = match constraint.decompose(w_center) {
            Some(parts) => ActiveSet::from_entries(constraint, parts)?,
            None => start_copy,
        };
        return Ok(SubproblemResult {
            y: w,
            active: fallback,
            fw_gap: model_fw_gap(&center, constraint, w_center)?,
            iters,
            objective: center.f0,
            capped,
            fell_back: true,
        });
    }

    let grad = center.model_gradient(&st.hz, q0);
    let (_, s_val) = constraint.lp_oracle(&grad)?;
    let fw_gap = dot(&grad, &active.z) - s_val;
    Ok(SubproblemResult {
        y: SimplexWeights::normalized(active.z.clone())?,
        active,
        fw_gap,
        iters,
        objective: h_final,
        capped,
        fell_back: false,
    })
}

/// Active vertex maximizing `⟨grad, v⟩`, ties to the smallest id.
fn away_vertex(st: &State, grad: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, d) in st.data.iter().enumerate() {
        let v = dot(grad, &d.v);
        if v > best.1 || (v == best.1 && st.entries[i].0 < st.entries[best.0].0) {
            best = (i, v);
        }
    }
    best
}

/// `x ← x + α (target - x)`
fn axpy_toward(x: &mut [f64], target: &[f64], alpha: f64) {
    for (a, b) in x.iter_mut().zip(target) {
        *a += alpha * (b - *a);
    }
}

/// `(mean(u e), mean(e²))` with `u = t - 1`.
fn direction_forms(t: &[f64], e: &[f64]) -> (f64, f64) {
    let (mut q1, mut q2) = (CompensatedSum::new(), CompensatedSum::new());
    for (ti, ei) in t.iter().zip(e) {
        q1.add((ti - 1.0) * ei);
        q2.add(ei * ei);
    }
    let n = t.len() as f64;
    (q1.value() / n, (q2.value() / n).max(0.0))
}

fn model_fw_gap(center: &Center<'_>, constraint: &ShapeConstraint, z: &[f64]) -> Result<f64> {
    let t = center.ratios_of(z);
    let grad = center.model_gradient(&center.hess_of(&t), center.q0(&t));
    let (_, s_val) = constraint.lp_oracle(&grad)?;
    Ok(dot(&grad, z) - s_val)
}

/// Exact gradient of the cubic model at `z`.
pub fn model_gradient(problem: &MixtureProblem, w_center: &[f64], l: f64, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != problem.m() || w_center.len() != problem.m() {
        return Err(Error::DimensionMismatch { expected: problem.m(), found: z.len() });
    }
    let r = objective::ratios(problem, w_center)?.ok_or(Error::InfeasiblePoint)?;
    let g = objective::gradient_from_ratios(problem, &r);
    let d: Vec<f64> = z.iter().zip(w_center).map(|(a, b)| a - b).collect();
    let hd = objective::hess_vec_from_ratios(problem, &r, &d);
    let q = objective::hess_form_from_ratios(problem, &r, &d);
    let c = 1.0 + 0.5 * l * libm::sqrt(q);
    Ok(g.iter().zip(&hd).map(|(g, h)| g + c * h).collect())
}

/// Minimizes `α ↦ h(z + α d)` over `[0, alpha_max]`.
pub fn line_search_cubic(
    problem: &MixtureProblem,
    w_center: &[f64],
    l: f64,
    z: &[f64],
    d: &[f64],
    alpha_max: f64,
) -> Result<f64> {
    let m = problem.m();
    for v in [w_center, z, d] {
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: v.len() });
        }
    }
    if !(alpha_max > 0.0) {
        return Err(Error::Argument("alpha_max must be positive"));
    }
    let center = Center::new(problem, w_center, l)?;
    let t = center.ratios_of(z);
    let e = center.ratios_of(d);
    let (q1, q2) = direction_forms(&t, &e);
    Ok(line_search_coeffs(dot(&center.g, d), center.q0(&t), q1, q2, l, alpha_max))
}

/// Bisection on `φ'(α) = gd + (q1 + α q2)(1 + (L/2)√(q0 + 2α q1 + α² q2))`.
fn line_search_coeffs(gd: f64, q0: f64, q1: f64, q2: f64, l: f64, alpha_max: f64) -> f64 {
    let dphi = |a: f64| {
        let q = (q0 + 2.0 * a * q1 + a * a * q2).max(0.0);
        gd + (q1 + a * q2) * (1.0 + 0.5 * l * libm::sqrt(q))
    };
    if !(dphi(0.0) < 0.0) {
        return 0.0;
    }
    let mut hi = if alpha_max.is_finite() {
        if dphi(alpha_max) <= 0.0 {
            return alpha_max;
        }
        alpha_max
    } else {
        let mut hi = 1.0;
        for _ in 0..1100 {
            if dphi(hi) >= 0.0 {
                break;
            }
            hi *= 2.0;
        }
        if dphi(hi) < 0.0 {
            return hi;
        }
        hi
    };
    let mut lo = 0.0;
    let width = 1e-15 * hi.max(1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= width {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Shape;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::vec::Vec;

    fn random_problem(m: usize, n: usize, seed: u64) -> MixtureProblem {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.05..2.0)).collect()).collect();
        MixtureProblem::from_rows(&rows).unwrap()
    }

    #[test]
    fn zero_gap_start_returns_immediately() {
        let p = MixtureProblem::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let c = ShapeConstraint::simplex(2);
        let start = ActiveSet::vertex(&c, VertexId::Index(1)).unwrap();
        let r = solve_subproblem(&p, &[0.5, 0.5], 1.0, &c, Some(start.clone()), StoppingRule::default()).unwrap();
        assert_eq!(r.iters, 0);
        assert_eq!(r.active, start);
        assert!(!r.fell_back);
    }

    #[test]
    fn quadratic_model_on_two_simplex() {
        let p = random_problem(2, 50, 7);
        let w = [0.5, 0.5];
        let g = objective::gradient(&p, &w).unwrap();
        let d = [1.0, -1.0];
        let q = objective::hess_quadratic_form(&p, &w, &d).unwrap();
        let x = 0.5 - dot(&g, &d) / q;
        assert!(x > 0.0 && x < 1.0, "instance must have an interior minimizer, got {x}");
        let c = ShapeConstraint::simplex(2);
        let stop = StoppingRule::relative(0.0, 200);
        let r = solve_subproblem(&p, &w, 0.0, &c, None, stop).unwrap();
        assert!((r.y[0] - x).abs() < 1e-8, "{} vs {x}", r.y[0]);
        assert!(r.iters <= 200);
    }

    #[test]
    fn model_values_never_increase() {
        for (seed, shape) in
            [(1, Shape::Simplex), (2, Shape::Concave), (3, Shape::Convex), (4, Shape::UnimodalFixed(3))]
        {
            let p = random_problem(8, 200, seed);
            let c = ShapeConstraint::new(shape, 8).unwrap();
            let w = SimplexWeights::uniform(8);
            let mut hs = Vec::new();
            let stop = StoppingRule::relative(1e-14, 2000);
            solve_observed(&p, &w, 2.0, &c, None, stop, &mut |h| hs.push(h)).unwrap();
            for pair in hs.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-14 * pair[0].abs().max(1.0), "{shape:?}: {pair:?}");
            }
        }
    }

    #[test]
    fn model_gradient_matches_finite_differences() {
        let p = random_problem(6, 120, 11);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let w = [0.1, 0.2, 0.3, 0.15, 0.15, 0.1];
        let z = [0.3, 0.1, 0.1, 0.2, 0.2, 0.1];
        let l = 3.0;
        let grad = model_gradient(&p, &w, l, &z).unwrap();
        let h = |y: &[f64]| objective::cubic_model(&p, y, &w, l).unwrap();
        for _ in 0..20 {
            let d: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eps = 1e-6;
            let plus: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
            let minus: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
            let fd = (h(&plus) - h(&minus)) / (2.0 * eps);
            let exact = dot(&grad, &d);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{fd} vs {exact}");
        }
        assert_eq!(model_gradient(&p, &w, l, &w).unwrap(), objective::gradient(&p, &w).unwrap());
    }

    #[test]
    fn line_search_matches_quadratic_closed_form() {
        let p = random_problem(5, 80, 21);
        let w = [0.2; 5];
        let z = [0.4, 0.1, 0.1, 0.2, 0.2];
        let d = [-0.3, 0.2, 0.05, 0.0, 0.05];
        let center = Center::new(&p, &w, 0.0).unwrap();
        let t = center.ratios_of(&z);
        let e = center.ratios_of(&d);
        let (q1, q2) = direction_forms(&t, &e);
        let gd = dot(&center.g, &d);
        for amax in [0.01, 0.5, 10.0] {
            let expected = (-(gd + q1) / q2).clamp(0.0, amax);
            let alpha = line_search_cubic(&p, &w, 0.0, &z, &d, amax).unwrap();
            assert!((alpha - expected).abs() < 1e-10, "{alpha} vs {expected}");
        }
    }

    #[test]
    fn line_search_edge_cases() {
        // φ'(0) ≥ 0
        assert_eq!(line_search_coeffs(1.0, 0.0, 0.0, 1.0, 1.0, 1.0), 0.0);
        // descent with an unbounded interval: cubic growth stops the step
        let a = line_search_coeffs(-1.0, 0.0, 0.0, 1e-4, 5.0, f64::INFINITY);
        assert!(a.is_finite() && a > 0.0);
        let phi = |a: f64| -a + 0.5 * 1e-4 * a * a + 5.0 / 6.0 * (1e-4 * a * a).powf(1.5);
        assert!(phi(a) < phi(0.0));
    }

    #[test]
    fn weights_track_the_iterate() {
        let p = random_problem(10, 300, 31);
        let c = ShapeConstraint::new(Shape::ConcaveIncreasing, 10).unwrap();
        let w = SimplexWeights::uniform(10);
        let stop = StoppingRule::relative(0.0, 1000);
        let r = solve_subproblem(&p, &w, 1.0, &c, None, stop).unwrap();
        let rebuilt = r.active.reconstruct(&c);
        for (a, b) in rebuilt.iter().zip(r.y.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
        assert!((r.active.entries().iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(r.active.entries().iter().all(|e| e.1 > 0.0));
        assert!(c.contains(&r.y, 1e-10));
        assert!(r.fw_gap >= -1e-12);
        assert!(r.objective <= objective::objective(&p, &w).unwrap());
    }

    #[test]
    fn linear_rate_on_simplex_quadratic() {
        let p = random_problem(6, 400, 41);
        let c = ShapeConstraint::simplex(6);
        let w = SimplexWeights::uniform(6);
        let long = StoppingRule::relative(0.0, 5000);
        let best = solve_subproblem(&p, &w, 0.0, &c, None, long).unwrap().objective;
        let mut hs = Vec::new();
        let stop = StoppingRule::relative(0.0, 400);
        solve_observed(&p, &w, 0.0, &c, None, stop, &mut |h| hs.push(h)).unwrap();
        let gaps: Vec<f64> = hs.iter().step_by(50).map(|h| h - best).collect();
        for pair in gaps.windows(2) {
            if pair[0] > 1e-12 {
                assert!(pair[1] <= 0.9 * pair[0], "{gaps:?}");
            }
        }
    }

    #[test]
    fn start_must_belong_to_constraint() {
        let p = random_problem(3, 20, 3);
        let c = ShapeConstraint::new(Shape::Convex, 3).unwrap();
        let simplex = ShapeConstraint::simplex(3);
        let start = ActiveSet::vertex(&simplex, VertexId::Index(1)).unwrap();
        let err = solve_subproblem(&p, &[1.0 / 3.0; 3], 1.0, &c, Some(start), StoppingRule::default());
        assert!(matches!(err, Err(Error::Argument(_))));
    }
}
