//! Cubic-regularized Newton method with an adaptive regularization parameter.
//!
//! Each outer iteration `k = 1, 2, …` solves the model subproblem with
//! [`afw::solve_subproblem`], accepts the candidate `y` once
//! `f(y) ≤ h(y) + γ_k` (otherwise `L ← βL` and the subproblem is re-solved),
//! and picks the next iterate among a damped step, `y`, and the current point.
//! `L` is carried over between iterations and never decreased.

use alloc::vec::Vec;

use crate::afw::{self, ActiveSet, StoppingRule};
use crate::basis::MixtureProblem;
use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::objective::{self, SimplexWeights};
use crate::polytope::{Shape, ShapeConstraint};

/// Acceptance retries per outer iteration before the step is abandoned.
const MAX_RETRIES: usize = 200;
/// Subproblems are not stopped on small model change while their FW gap
/// exceeds this fraction of the current outer gap (or of the certificate
/// threshold, whichever is larger).
const SUBPROBLEM_GAP_FRACTION: f64 = 0.1;
/// Consecutive iterations without decrease before giving up.
const MAX_STALLS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub l0: f64,
    pub beta: f64,
    /// `γ_k = gamma_base^k`
    pub gamma_base: f64,
    /// `ρ_k = rho_base^k`
    pub rho_base: f64,
    pub shorter_step_iters: usize,
    pub shorter_step_factor: f64,
    pub outer_tol: f64,
    pub gap_tol: f64,
    pub max_outer: usize,
    pub subproblem_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            l0: 3.0 / core::f64::consts::SQRT_2,
            beta: 1.5,
            gamma_base: 0.8,
            rho_base: 0.8,
            shorter_step_iters: 10,
            shorter_step_factor: 0.5,
            outer_tol: 1e-10,
            gap_tol: 1e-6,
            max_outer: 500,
            subproblem_max_iters: 50_000,
        }
    }
}

impl SolverConfig {
    /// Defaults with five damped-step iterations instead of ten.
    pub fn real_data() -> Self {
        Self { shorter_step_iters: 5, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > 0.0) || !self.l0.is_finite() {
            return Err(Error::Argument("L0 must be positive and finite"));
        }
        if !(self.beta > 1.0 && self.beta < 2.0) {
            return Err(Error::Argument("beta must lie strictly between 1 and 2"));
        }
        if !(0.0..1.0).contains(&self.gamma_base) || !(0.0..1.0).contains(&self.rho_base) {
            return Err(Error::Argument("gamma and rho schedule bases must lie in [0, 1)"));
        }
        if !(self.shorter_step_factor > 0.0 && self.shorter_step_factor < 1.0) {
            return Err(Error::Argument("shorter step factor must lie in (0, 1)"));
        }
        if !(self.outer_tol >= 0.0) || !(self.gap_tol >= 0.0) {
            return Err(Error::Argument("tolerances must be nonnegative"));
        }
        if self.subproblem_max_iters == 0 {
            return Err(Error::Argument("subproblem iteration cap must be positive"));
        }
        Ok(())
    }

    pub fn gamma(&self, k: usize) -> f64 {
        libm::pow(self.gamma_base, k as f64)
    }

    pub fn rho(&self, k: usize) -> f64 {
        libm::pow(self.rho_base, k as f64)
    }

    /// Relative-change tolerance for the subproblem of outer iteration `k`.
    pub fn subproblem_tol(&self, k: usize) -> f64 {
        match k {
            0..=3 => 1e-8,
            4..=9 => 1e-9,
            _ => 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Init,
    /// `w + factor (y - w)`
    Shorter,
    /// `y`
    Full,
    /// `w` kept
    Stall,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Init => "init",
            StepKind::Shorter => "shorter",
            StepKind::Full => "full",
            StepKind::Stall => "stall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// FW-gap certificate met.
    Converged,
    /// Relative change fell below `outer_tol` before the certificate was met.
    SmallChange,
    /// No decrease over several iterations.
    Stalled,
    IterationCapped,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::SmallChange => "small-change",
            Status::Stalled => "stalled",
            Status::IterationCapped => "iteration-capped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub f: f64,
    pub l: f64,
    pub retries: usize,
    pub subiters: usize,
    pub fw_gap: f64,
    pub step: StepKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub status: Status,
}

impl SolveTrace {
    pub fn outer_iters(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn max_l(&self) -> f64 {
        self.records.iter().map(|r| r.l).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub w: SimplexWeights,
    pub f: f64,
    pub fw_gap: f64,
    pub trace: SolveTrace,
}

impl SolveResult {
    pub fn status(&self) -> Status {
        self.trace.status
    }
}

/// `max_{v ∈ C} ⟨∇f(w), w - v⟩`
pub fn fw_gap(problem: &MixtureProblem, constraint: &ShapeConstraint, w: &[f64]) -> Result<f64> {
    let g = objective::gradient(problem, w)?;
    let (_, min_val) = constraint.lp_oracle(&g)?;
    Ok(dot(&g, w) - min_val)
}

/// `f(y) ≤ h(y, w) + γ`; false when `f(y) = +inf`.
pub fn acceptance_test(problem: &MixtureProblem, w: &[f64], y: &[f64], l: f64, gamma: f64) -> Result<bool> {
    let fy = objective::objective(problem, y)?;
    if !fy.is_finite() {
        return Ok(false);
    }
    let h = objective::cubic_model(problem, y, w, l)?;
    Ok(fy <= h + gamma)
}

/// Chooses `w_{k+1}` once `y` has been accepted.
pub fn next_iterate(
    problem: &MixtureProblem,
    w: &SimplexWeights,
    y: &SimplexWeights,
    k: usize,
    config: &SolverConfig,
) -> Result<(SimplexWeights, StepKind)> {
    let fw = objective::objective(problem, w)?;
    let fy = objective::objective(problem, y)?;
    let (point, kind, _) = choose_next(problem, w, fw, y, fy, k, config)?;
    Ok((point, kind))
}

fn choose_next(
    problem: &MixtureProblem,
    w: &SimplexWeights,
    fw: f64,
    y: &SimplexWeights,
    fy: f64,
    k: usize,
    config: &SolverConfig,
) -> Result<(SimplexWeights, StepKind, f64)> {
    if k <= config.shorter_step_iters {
        let t = config.shorter_step_factor;
        let s: Vec<f64> = w.iter().zip(y.iter()).map(|(a, b)| a + t * (b - a)).collect();
        let fs = objective::objective(problem, &s)?;
        if fs <= fw && fs <= fy + config.rho(k) {
            return Ok((SimplexWeights::normalized(s)?, StepKind::Shorter, fs));
        }
    }
    if fy <= fw {
        Ok((y.clone(), StepKind::Full, fy))
    } else {
        Ok((w.clone(), StepKind::Stall, fw))
    }
}

/// Minimizes `f` over `constraint`, from `w0` or the uniform vector.
pub fn minimize(
    problem: &MixtureProblem,
    constraint: &ShapeConstraint,
    config: &SolverConfig,
    w0: Option<&SimplexWeights>,
) -> Result<SolveResult> {
    config.validate()?;
    let m = problem.m();
    if constraint.m() != m {
        return Err(Error::DimensionMismatch { expected: m, found: constraint.m() });
    }
    let mut w = match w0 {
        Some(w0) => {
            if w0.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: w0.len() });
            }
            w0.clone()
        }
        None => SimplexWeights::uniform(m),
    };
    if !constraint.contains(&w, 1e-9) {
        return Err(Error::InfeasibleStart);
    }
    let mut f = objective::objective(problem, &w)?;
    if !f.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut repr = match w0 {
        None => Some(ActiveSet::from_entries(constraint, constraint.uniform_decomposition())?),
        Some(_) => constraint.decompose(&w).and_then(|p| ActiveSet::from_entries(constraint, p).ok()),
    };
    let mut l = config.l0;
    let mut gap = fw_gap(problem, constraint, &w)?;
    let mut records =
        alloc::vec![TraceRecord { k: 0, f, l, retries: 0, subiters: 0, fw_gap: gap, step: StepKind::Init }];
    let certified = |f: f64, gap: f64| gap <= config.gap_tol * libm::fabs(f).max(1.0);

    if certified(f, gap) {
        return Ok(SolveResult { w, f, fw_gap: gap, trace: SolveTrace { records, status: Status::Converged } });
    }

    let mut stalls = 0;
    let mut status = Status::IterationCapped;
    for k in 1..=config.max_outer {
        let stop = StoppingRule {
            tol: config.subproblem_tol(k),
            max_iters: config.subproblem_max_iters,
            gap_floor: SUBPROBLEM_GAP_FRACTION * gap.max(config.gap_tol * libm::fabs(f).max(1.0)),
        };
        let gamma = config.gamma(k);
        let mut retries = 0;
        let mut subiters = 0;
        let accepted = loop {
            let sub = afw::solve_subproblem(problem, &w, l, constraint, repr.clone(), stop)?;
            subiters += sub.iters;
            let fy = objective::objective(problem, &sub.y)?;
            if fy.is_finite() && fy <= sub.objective + gamma {
                break Some((sub, fy));
            }
            if retries == MAX_RETRIES {
                break None;
            }
            l *= config.beta;
            retries += 1;
        };

        let f_prev = f;
        let step = match accepted {
            Some((sub, fy)) => {
                let (next, kind, f_next) = choose_next(problem, &w, f, &sub.y, fy, k, config)?;
                repr = match kind {
                    StepKind::Full if !sub.fell_back => Some(sub.active),
                    StepKind::Shorter if !sub.fell_back => match &repr {
                        Some(r) => r.combine(&sub.active, config.shorter_step_factor, constraint).ok(),
                        None => None,
                    },
                    StepKind::Full | StepKind::Shorter => {
                        constraint.decompose(&next).and_then(|p| ActiveSet::from_entries(constraint, p).ok())
                    }
                    _ => repr,
                };
                w = next;
                f = f_next;
                kind
            }
            None => StepKind::Stall,
        };
        gap = fw_gap(problem, constraint, &w)?;
        records.push(TraceRecord { k, f, l, retries, subiters, fw_gap: gap, step });

        if certified(f, gap) {
            status = Status::Converged;
            break;
        }
        if f < f_prev {
            stalls = 0;
            if libm::fabs(f_prev - f) / libm::fabs(f_prev).max(1.0) < config.outer_tol {
                status = Status::SmallChange;
                break;
            }
        } else {
            stalls += 1;
            if stalls >= MAX_STALLS {
                status = Status::Stalled;
                break;
            }
        }
    }
    Ok(SolveResult { w, f, fw_gap: gap, trace: SolveTrace { records, status } })
}

#[derive(Debug, Clone)]
pub struct UnimodalFit {
    /// 1-based mode index of the best fit.
    pub k_star: usize,
    pub result: SolveResult,
    /// Final objective for every mode `1..=M`.
    pub per_mode_f: Vec<f64>,
}

/// Solves the fixed-mode problem for every mode and keeps the best.
pub fn fit_unimodal(problem: &MixtureProblem, config: &SolverConfig) -> Result<UnimodalFit> {
    let m = problem.m();
    let mut best: Option<(usize, SolveResult)> = None;
    let mut per_mode_f = Vec::with_capacity(m);
    for k in 1..=m {
        let c = ShapeConstraint::new(Shape::UnimodalFixed(k), m)?;
        let r = minimize(problem, &c, config, None)?;
        per_mode_f.push(r.f);
        let better = match &best {
            Some((_, b)) => r.f < b.f,
            None => true,
        };
        if better {
            best = Some((k, r));
        }
    }
    let (k_star, result) = best.expect("M >= 1");
    Ok(UnimodalFit { k_star, result, per_mode_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::vec::Vec;

    fn random_problem(m: usize, n: usize, seed: u64) -> MixtureProblem {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.01..2.0)).collect()).collect();
        MixtureProblem::from_rows(&rows).unwrap()
    }

    fn assert_trace_invariants(p: &MixtureProblem, r: &SolveResult, cfg: &SolverConfig) {
        let bound = (48.0 * p.n() as f64).max(cfg.l0);
        for rec in &r.trace.records {
            assert!(rec.l <= bound, "L = {} exceeds {bound}", rec.l);
        }
        for pair in r.trace.records.windows(2) {
            assert!(pair[1].f <= pair[0].f + 1e-14, "{pair:?}");
        }
    }

    #[test]
    fn single_component_needs_no_iterations() {
        let p = MixtureProblem::from_rows(&[vec![0.5, 2.0, 1.0]]).unwrap();
        for shape in Shape::ALL_FIXED.iter().copied().chain([Shape::UnimodalFixed(1)]) {
            let c = ShapeConstraint::new(shape, 1).unwrap();
            let r = minimize(&p, &c, &SolverConfig::default(), None).unwrap();
            assert_eq!(r.w.as_slice(), &[1.0]);
            assert_eq!(r.trace.outer_iters(), 0);
            assert_eq!(r.status(), Status::Converged);
        }
        let u = fit_unimodal(&p, &SolverConfig::default()).unwrap();
        assert_eq!(u.k_star, 1);
        assert_eq!(u.result.w.as_slice(), &[1.0]);
    }

    #[test]
    fn symmetric_instance() {
        let p = MixtureProblem::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let c = ShapeConstraint::simplex(2);
        let r = minimize(&p, &c, &SolverConfig::default(), None).unwrap();
        assert!((r.w[0] - 0.5).abs() < 1e-8);
        assert_eq!(r.status(), Status::Converged);
    }

    #[test]
    fn acceptance_examples() {
        let p = random_problem(4, 30, 5);
        let w = [0.25; 4];
        assert!(acceptance_test(&p, &w, &w, 1.0, 0.0).unwrap());
        let y = [0.7, 0.1, 0.1, 0.1];
        assert!(acceptance_test(&p, &w, &y, 1e-6, 1e9).unwrap());
        let p2 = MixtureProblem::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(!acceptance_test(&p2, &[0.5, 0.5], &[1.0, 0.0], 1.0, 1e9).unwrap());
    }

    #[test]
    fn acceptance_holds_once_l_is_large() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for trial in 0..100 {
            let m = rng.gen_range(2..6);
            let n = rng.gen_range(2..12);
            let p = random_problem(m, n, 1000 + trial);
            let c = ShapeConstraint::simplex(m);
            let w = SimplexWeights::uniform(m);
            let l = 48.0 * n as f64;
            let stop = StoppingRule::relative(1e-12, 10_000);
            let sub = afw::solve_subproblem(&p, &w, l, &c, None, stop).unwrap();
            assert!(sub.objective <= objective::objective(&p, &w).unwrap());
            assert!(acceptance_test(&p, &w, &sub.y, l, 0.0).unwrap(), "trial {trial}");
        }
    }

    #[test]
    fn next_iterate_rule_order() {
        let p = MixtureProblem::from_rows(&[vec![2.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let cfg = SolverConfig::default();
        let w = SimplexWeights::new(vec![0.9, 0.1]).unwrap();
        let y = SimplexWeights::new(vec![0.5, 0.5]).unwrap();
        // midpoint (0.7, 0.3) improves on w and is within ρ_1 of f(y)
        let (next, kind) = next_iterate(&p, &w, &y, 1, &cfg).unwrap();
        assert_eq!(kind, StepKind::Shorter);
        assert!((next[0] - 0.7).abs() < 1e-15);
        // past the damped-step window the full step is used
        let (next, kind) = next_iterate(&p, &w, &y, 11, &cfg).unwrap();
        assert_eq!((next, kind), (y.clone(), StepKind::Full));
        // with ρ = 0 the midpoint is worse than y and is rejected
        let strict = SolverConfig { rho_base: 0.0, ..cfg };
        let (next, kind) = next_iterate(&p, &w, &y, 1, &strict).unwrap();
        assert_eq!((next, kind), (y.clone(), StepKind::Full));
        // y worse than w keeps w
        let (next, kind) = next_iterate(&p, &y, &w, 11, &cfg).unwrap();
        assert_eq!((next, kind), (y, StepKind::Stall));
    }

    #[test]
    fn constrained_solves_are_feasible_and_certified() {
        for (seed, shape) in Shape::ALL_FIXED.iter().copied().chain([Shape::UnimodalFixed(4)]).enumerate() {
            let p = random_problem(8, 300, seed as u64 + 50);
            let c = ShapeConstraint::new(shape, 8).unwrap();
            let cfg = SolverConfig::default();
            let r = minimize(&p, &c, &cfg, None).unwrap();
            assert_eq!(r.status(), Status::Converged, "{shape:?}");
            assert!(c.contains(&r.w, 1e-9));
            assert!(r.fw_gap <= 1e-6 * r.f.abs().max(1.0));
            assert_trace_invariants(&p, &r, &cfg);
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let p = random_problem(3, 20, 1);
        let c = ShapeConstraint::new(Shape::Decreasing, 3).unwrap();
        let w0 = SimplexWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(minimize(&p, &c, &SolverConfig::default(), Some(&w0)), Err(Error::InfeasibleStart)));
        let bad = SolverConfig { beta: 2.0, ..SolverConfig::default() };
        assert!(minimize(&p, &c, &bad, None).is_err());
    }

    #[test]
    fn warm_start_from_supplied_point() {
        let p = random_problem(6, 200, 8);
        let c = ShapeConstraint::new(Shape::Convex, 6).unwrap();
        let w0 = SimplexWeights::new(vec![0.3, 0.15, 0.05, 0.05, 0.15, 0.3]).unwrap();
        let r = minimize(&p, &c, &SolverConfig::default(), Some(&w0)).unwrap();
        assert_eq!(r.status(), Status::Converged);
        assert!(r.f <= objective::objective(&p, &w0).unwrap());
    }

    #[test]
    fn unimodal_search_picks_the_best_mode() {
        let p = random_problem(6, 150, 77);
        let u = fit_unimodal(&p, &SolverConfig::default()).unwrap();
        assert_eq!(u.per_mode_f.len(), 6);
        for f in &u.per_mode_f {
            assert!(u.per_mode_f[u.k_star - 1] <= f + 1e-12);
        }
        assert_eq!(u.result.f, u.per_mode_f[u.k_star - 1]);
    }
}
