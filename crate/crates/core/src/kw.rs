//! Certificates linking a discretized Gaussian-location fit to the
//! Kiefer-Wolfowitz NPMLE over all mixing distributions.
//!
//! For unit-variance kernels the dual variables of the grid problem are
//! `ν_i = 1 / Σ_j w_j φ(X_i - μ_j)`. With `F(μ) = Σ_i ν_i φ(X_i - μ)` and any
//! `Γ ≥ sup_μ F(μ)`, the optimal value `p̂_G = N f(ŵ)` of the grid problem
//! satisfies
//!
//! ```text
//! p* ≤ p̂_G ≤ p* + N log(Γ/N)
//! p̂_G ≤ p* + N log(1 + ΔG / √(8πe) · mean(ν))
//! ```
//!
//! where `ΔG` is the largest spacing of the atom grid, which must bracket the
//! samples. A weighted dual distance is bounded by `ρ⁻¹` of either bound with
//! `ρ(t) = t - log(1 + t)`.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::basis::{BasisSpec, MixtureProblem};
use crate::error::{Error, Result};
use crate::numeric::{normal_pdf, CompensatedSum, FRAC_1_SQRT_2PI, POSITIVITY_FLOOR};
use crate::objective;

/// `1/√(2πe)`, the Lipschitz constant of the standard normal density.
pub const NORMAL_PDF_LIPSCHITZ: f64 = 0.241_970_724_519_143_37;
/// Grid cells per gap between consecutive distinct samples.
const CELLS_PER_GAP: usize = 10;
/// Upper limit on branch-and-bound cell splits.
const MAX_SPLITS: usize = 1_000_000;

/// `ν_i = 1 / ⟨B_i, w⟩`. Requires a Gaussian basis with `σ = 1`.
pub fn dual_from_primal(problem: &MixtureProblem, w: &[f64]) -> Result<Vec<f64>> {
    require_unit_gaussian(problem)?;
    let r = objective::ratios(problem, w)?.ok_or(Error::InfeasiblePoint)?;
    Ok(r.inner.iter().map(|a| 1.0 / a).collect())
}

fn require_unit_gaussian(problem: &MixtureProblem) -> Result<&[f64]> {
    match problem.basis() {
        Some(BasisSpec::GaussianLocation { locations, sigma }) if *sigma == 1.0 => Ok(locations),
        _ => Err(Error::UnsupportedBasis),
    }
}

/// `F(μ) = Σ_i ν_i φ(X_i - μ)`
pub fn dual_profile(nu: &[f64], samples: &[f64], mu: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (n, x) in nu.iter().zip(samples) {
        acc.add(n * normal_pdf(x - mu));
    }
    acc.value()
}

/// `max_j F(μ_j) - N`; nonpositive iff `ν` is feasible for the grid dual.
/// An empty grid gives `-inf`.
pub fn dual_feasibility_margin(nu: &[f64], samples: &[f64], atoms: &[f64]) -> f64 {
    let n = samples.len() as f64;
    atoms.iter().map(|&mu| dual_profile(nu, samples, mu)).fold(f64::NEG_INFINITY, f64::max) - n
}

#[derive(Clone, Copy)]
struct Cell {
    upper: f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper).then(other.a.total_cmp(&self.a))
    }
}

/// Certified upper bound on `sup_μ F(μ)`.
///
/// `F` increases left of the smallest sample and decreases right of the
/// largest, so only `[X_min, X_max]` is searched. Cells are bounded by the
/// larger endpoint value plus `min(Lip·h/2, Curv·h²/8)` with
/// `Lip = Σν/√(2πe)` and `Curv = Σν/√(2π)`, and split best-first until the
/// bound is within `1e-12` (relative) of the best value found.
pub fn gamma_estimate(nu: &[f64], samples: &[f64]) -> Result<f64> {
    if nu.len() != samples.len() {
        return Err(Error::DimensionMismatch { expected: samples.len(), found: nu.len() });
    }
    if samples.is_empty() {
        return Err(Error::Argument("at least one sample is required"));
    }
    if nu.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Argument("dual variables must be positive and finite"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Argument("samples must be finite"));
    }
    let total = crate::numeric::sum(nu.iter().copied());
    let lip = total * NORMAL_PDF_LIPSCHITZ;
    let curv = total * FRAC_1_SQRT_2PI;
    let slack = |h: f64| (0.5 * lip * h).min(0.125 * curv * h * h);
    let f = |mu: f64| dual_profile(nu, samples, mu);

    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut nodes = Vec::with_capacity((xs.len() - 1) * CELLS_PER_GAP + 1);
    for pair in xs.windows(2) {
        let step = (pair[1] - pair[0]) / CELLS_PER_GAP as f64;
        nodes.extend((0..CELLS_PER_GAP).map(|i| pair[0] + step * i as f64));
    }
    nodes.push(*xs.last().expect("nonempty"));
    let values: Vec<f64> = nodes.iter().map(|&mu| f(mu)).collect();
    let mut lower = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut heap: BinaryHeap<Cell> = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| Cell { upper: v[0].max(v[1]) + slack(x[1] - x[0]), a: x[0], b: x[1], fa: v[0], fb: v[1] })
        .collect();
    for _ in 0..MAX_SPLITS {
        let Some(top) = heap.peek().copied() else { break };
        if top.upper <= lower * (1.0 + 1e-12) {
            break;
        }
        heap.pop();
        let mid = 0.5 * (top.a + top.b);
        if !(mid > top.a && mid < top.b) {
            // cannot split further; the endpoint values are exact
            heap.push(Cell { upper: top.fa.max(top.fb), ..top });
            lower = lower.max(top.fa.max(top.fb));
            continue;
        }
        let fm = f(mid);
        lower = lower.max(fm);
        let h = 0.5 * (top.b - top.a);
        heap.push(Cell { upper: top.fa.max(fm) + slack(h), a: top.a, b: mid, fa: top.fa, fb: fm });
        heap.push(Cell { upper: fm.max(top.fb) + slack(h), a: mid, b: top.b, fa: fm, fb: top.fb });
    }
    Ok(heap.peek().map_or(lower, |c| c.upper.max(lower)))
}

/// Largest spacing between consecutive sorted atoms.
pub fn grid_spacing(atoms: &[f64]) -> f64 {
    let mut xs = atoms.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
}

/// Errors unless `min atom ≤ min sample` and `max sample ≤ max atom`.
pub fn check_bracketing(samples: &[f64], atoms: &[f64]) -> Result<()> {
    let (min_sample, max_sample) =
        crate::basis::min_max(samples).ok_or(Error::Argument("at least one sample is required"))?;
    let (min_atom, max_atom) = crate::basis::min_max(atoms).ok_or(Error::Argument("at least one atom is required"))?;
    if min_atom <= min_sample && max_sample <= max_atom {
        Ok(())
    } else {
        Err(Error::NotBracketing { min_atom, max_atom, min_sample, max_sample })
    }
}

/// `(N log(Γ/N), N log(1 + ΔG/√(8πe) · mean(ν)))`
pub fn gap_bounds(gamma: f64, n: usize, delta_g: f64, nu: &[f64]) -> Result<(f64, f64)> {
    if n == 0 || nu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: nu.len() });
    }
    let nf = n as f64;
    if !gamma.is_finite() || gamma < nf * (1.0 - 1e-9) {
        return Err(Error::InvalidCertificate("gamma must be at least N"));
    }
    if !(delta_g >= 0.0) || !delta_g.is_finite() {
        return Err(Error::Argument("grid spacing must be finite and nonnegative"));
    }
    let b17 = nf * libm::log(gamma.max(nf) / nf);
    let mean_nu = crate::numeric::sum(nu.iter().copied()) / nf;
    // 1/√(8πe) = Lip/2
    let b18 = nf * libm::log1p(delta_g * 0.5 * NORMAL_PDF_LIPSCHITZ * mean_nu);
    Ok((b17, b18))
}

/// `ρ(t) = t - log(1 + t)`
pub fn rho(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Argument("rho is defined for t >= 0"));
    }
    if t < 0.1 {
        // alternating series t²/2 - t³/3 + …; 20 terms reach full precision at t = 0.1
        let mut term = t;
        let mut acc = 0.0;
        for k in 2..22 {
            term *= -t;
            acc -= term / k as f64;
        }
        return Ok(acc);
    }
    Ok(t - libm::log1p(t))
}

/// Inverse of [`rho`] on `[0, ∞)` by bisection.
pub fn rho_inv(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Argument("rho_inv is defined for x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if !x.is_finite() {
        return Ok(f64::INFINITY);
    }
    let mut hi = (2.0 * x + 2.0 * libm::sqrt(2.0 * x)).max(1.0);
    while rho(hi)? < x {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho(mid)? < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (rho(lo)?, rho(hi)?);
    Ok(if libm::fabs(rl - x) < libm::fabs(rh - x) { lo } else { hi })
}

/// `ρ⁻¹(gap_bound)`
pub fn dual_distance_bound(gap_bound: f64) -> Result<f64> {
    rho_inv(gap_bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KwCertificate {
    /// Dual variables recovered from the primal weights.
    pub nu: Vec<f64>,
    pub nu_min: f64,
    pub nu_max: f64,
    pub feasibility_margin: f64,
    /// Certified bound on the continuum maximum of the (rescaled) dual profile.
    pub gamma: f64,
    pub gap_bound_17: f64,
    pub gap_bound_18: f64,
    pub dual_distance_bound: f64,
    /// `N f(w)`
    pub p_hat: f64,
    pub delta_g: f64,
}

/// Builds the full certificate for weights `w` on a unit-variance Gaussian
/// problem whose locations bracket the samples.
///
/// A positive feasibility margin `m` is absorbed by scaling
/// `ν ← ν · N/(N + m)` before `Γ` and the bounds are computed.
pub fn certify(problem: &MixtureProblem, w: &[f64]) -> Result<KwCertificate> {
    let atoms = require_unit_gaussian(problem)?;
    let samples = problem.samples();
    check_bracketing(samples, atoms)?;
    let nu = dual_from_primal(problem, w)?;
    if nu.iter().any(|v| !v.is_finite() || *v >= 1.0 / POSITIVITY_FLOOR) {
        return Err(Error::InfeasiblePoint);
    }
    let n = samples.len();
    let nf = n as f64;
    let margin = dual_feasibility_margin(&nu, samples, atoms);
    let scaled: Vec<f64> = if margin > 0.0 { nu.iter().map(|v| v * nf / (nf + margin)).collect() } else { nu.clone() };
    let gamma = gamma_estimate(&scaled, samples)?.max(nf);
    let delta_g = grid_spacing(atoms);
    let (b17, b18) = gap_bounds(gamma, n, delta_g, &scaled)?;
    let p_hat = nf * objective::objective(problem, w)?;
    Ok(KwCertificate {
        nu_min: nu.iter().copied().fold(f64::INFINITY, f64::min),
        nu_max: nu.iter().copied().fold(0.0, f64::max),
        nu,
        feasibility_margin: margin,
        gamma,
        gap_bound_17: b17,
        gap_bound_18: b18,
        dual_distance_bound: dual_distance_bound(b17.min(b18).max(0.0))?,
        p_hat,
        delta_g,
    })
}
