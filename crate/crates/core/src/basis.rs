//! Basis families and the evaluation matrix `B[i][j] = ψ_i(X_j)`.
//!
//! Two families are supported: the Bernstein/Beta family on `[0, 1]`, whose
//! `m`-th element is the `Beta(m, M - m + 1)` density, and Gaussian location
//! kernels `φ((x - μ_i) / σ)` on a fixed grid of locations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{normal_pdf, POSITIVITY_FLOOR};
use crate::objective::SimplexWeights;

/// Default number of grid points for density evaluation.
pub const DEFAULT_DENSITY_GRID: usize = 1001;

#[derive(Debug, Clone, PartialEq)]
pub enum BasisSpec {
    /// Bernstein basis of degree `m` (that many components).
    Bernstein { m: usize },
    /// Gaussian kernels centred at strictly increasing `locations`.
    GaussianLocation { locations: Vec<f64>, sigma: f64 },
}

impl BasisSpec {
    pub fn bernstein(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("Bernstein degree M must be at least 1"));
        }
        Ok(BasisSpec::Bernstein { m })
    }

    pub fn gaussian(locations: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Argument("sigma must be a positive finite number"));
        }
        if locations.is_empty() {
            return Err(Error::Argument("at least one location is required"));
        }
        if locations.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("locations must be finite"));
        }
        if locations.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Argument("locations must be strictly increasing"));
        }
        Ok(BasisSpec::GaussianLocation { locations, sigma })
    }

    /// Number of basis elements.
    pub fn len(&self) -> usize {
        match self {
            BasisSpec::Bernstein { m } => *m,
            BasisSpec::GaussianLocation { locations, .. } => locations.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `ψ_i(x)` for every `i` into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.len());
        match self {
            BasisSpec::Bernstein { m } => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Domain { value: x, reason: "Bernstein basis is supported on [0, 1]" });
                }
                let coeffs = log_binomial_coefficients(*m);
                bernstein_column(*m, &coeffs, x, out);
            }
            BasisSpec::GaussianLocation { locations, sigma } => {
                for (o, mu) in out.iter_mut().zip(locations) {
                    *o = normal_pdf((x - mu) / sigma);
                }
            }
        }
        Ok(())
    }
}

/// `ln Γ(M+1) - ln Γ(m) - ln Γ(M-m+1)` for `m = 1..=M`.
fn log_binomial_coefficients(m: usize) -> Vec<f64> {
    let top = libm::lgamma(m as f64 + 1.0);
    (1..=m).map(|k| top - libm::lgamma(k as f64) - libm::lgamma((m - k) as f64 + 1.0)).collect()
}

/// `k * ln(x)` with the convention `0 * ln(0) = 0` (i.e. `0^0 = 1`).
#[inline]
fn scaled_log(k: usize, log_x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * log_x
    }
}

fn bernstein_column(m: usize, coeffs: &[f64], x: f64, out: &mut [f64]) {
    if x == 0.0 || x == 1.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[if x == 0.0 { 0 } else { m - 1 }] = m as f64;
        return;
    }
    let lx = libm::log(x);
    let l1x = libm::log1p(-x);
    for (k, (o, c)) in out.iter_mut().zip(coeffs).enumerate() {
        // k is zero-based: b̃_{k+1}(x) ∝ x^k (1-x)^(M-1-k)
        let e = c + scaled_log(k, lx) + scaled_log(m - 1 - k, l1x);
        *o = libm::exp(e);
    }
}

/// The immutable problem instance: `M x N` nonnegative matrix plus metadata.
///
/// Storage is column-major so that each sample's `M` basis values are
/// contiguous.
#[derive(Debug, Clone)]
pub struct MixtureProblem {
    data: Vec<f64>,
    m: usize,
    n: usize,
    basis: Option<BasisSpec>,
    samples: Vec<f64>,
}

impl MixtureProblem {
    /// Builds the evaluation matrix for a basis and a set of samples.
    pub fn from_basis(basis: BasisSpec, samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("at least one sample is required"));
        }
        let m = basis.len();
        let n = samples.len();
        let mut data = alloc::vec![0.0; m * n];
        match &basis {
            BasisSpec::Bernstein { .. } => {
                if let Some(&x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::Domain { value: x, reason: "Bernstein samples must lie in [0, 1]" });
                }
                let coeffs = log_binomial_coefficients(m);
                for (col, &x) in data.chunks_exact_mut(m).zip(samples) {
                    bernstein_column(m, &coeffs, x, col);
                }
            }
            BasisSpec::GaussianLocation { .. } => {
                if let Some(&x) = samples.iter().find(|x| !x.is_finite()) {
                    return Err(Error::Domain { value: x, reason: "samples must be finite" });
                }
                for (col, &x) in data.chunks_exact_mut(m).zip(samples) {
                    basis.eval_into(x, col)?;
                }
            }
        }
        Self::validated(data, m, n, Some(basis), samples.to_vec())
    }

    /// Builds a problem from an explicit matrix given as `M` rows of length `N`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::Argument("matrix must have at least one row"));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::Argument("matrix must have at least one column"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: r.len() });
        }
        let mut data = alloc::vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * m + i] = v;
            }
        }
        Self::validated(data, m, n, None, Vec::new())
    }

    fn validated(mut data: Vec<f64>, m: usize, n: usize, basis: Option<BasisSpec>, samples: Vec<f64>) -> Result<Self> {
        if let Some(&v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain { value: v, reason: "matrix entries must be finite and nonnegative" });
        }
        // subnormal entries make every pass over the matrix several times slower
        data.iter_mut().filter(|v| **v < f64::MIN_POSITIVE).for_each(|v| *v = 0.0);
        for (j, col) in data.chunks_exact(m).enumerate() {
            if col.iter().all(|&v| v < POSITIVITY_FLOOR) {
                return Err(Error::DegenerateColumn { sample: j });
            }
        }
        Ok(Self { data, m, n, basis, samples })
    }

    /// Number of components `M`.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of samples `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// The whole matrix, column-major.
    pub fn columns_flat(&self) -> &[f64] {
        &self.data
    }

    /// The `M` basis values of sample `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    pub fn columns(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.m)
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.m + i]
    }

    pub fn basis(&self) -> Option<&BasisSpec> {
        self.basis.as_ref()
    }

    /// Samples the matrix was built from (empty for explicit matrices).
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Evaluation matrix of the Bernstein basis of degree `m`.
pub fn bernstein_matrix(samples: &[f64], m: usize) -> Result<MixtureProblem> {
    MixtureProblem::from_basis(BasisSpec::bernstein(m)?, samples)
}

/// Evaluation matrix of Gaussian location kernels.
pub fn gaussian_location_matrix(samples: &[f64], locations: &[f64], sigma: f64) -> Result<MixtureProblem> {
    MixtureProblem::from_basis(BasisSpec::gaussian(locations.to_vec(), sigma)?, samples)
}

/// `m` equispaced points from `min(samples)` to `max(samples)` inclusive.
pub fn uniform_location_grid(samples: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::Argument("grid needs at least two points"));
    }
    let (lo, hi) = min_max(samples).ok_or(Error::Argument("at least one sample is required"))?;
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    Ok(linspace(lo, hi, m))
}

/// `m >= 2` equispaced points from `lo` to `hi`, with both endpoints exact.
pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return alloc::vec![lo];
    }
    let step = (hi - lo) / (m - 1) as f64;
    let mut out: Vec<f64> = (0..m).map(|i| lo + step * i as f64).collect();
    out[m - 1] = hi;
    out
}

pub(crate) fn min_max(xs: &[f64]) -> Option<(f64, f64)> {
    let mut it = xs.iter().copied();
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
}

/// Evaluates the mixture density `Σ_i w_i ψ_i(x)` at each grid point.
pub fn density_eval(basis: &BasisSpec, w: &SimplexWeights, grid: &[f64]) -> Result<Vec<f64>> {
    let m = basis.len();
    if w.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: w.len() });
    }
    let mut col = alloc::vec![0.0; m];
    let coeffs = match basis {
        BasisSpec::Bernstein { m } => Some(log_binomial_coefficients(*m)),
        BasisSpec::GaussianLocation { .. } => None,
    };
    grid.iter()
        .map(|&x| {
            match (&coeffs, basis) {
                (Some(c), BasisSpec::Bernstein { m }) => {
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Error::Domain { value: x, reason: "Bernstein basis is supported on [0, 1]" });
                    }
                    bernstein_column(*m, c, x, &mut col);
                }
                _ => basis.eval_into(x, &mut col)?,
            }
            // weights may carry -1e-12 rounding; the clamp keeps the density nonnegative
            Ok(crate::numeric::dot(&col, w.as_slice()).max(0.0))
        })
        .collect()
}
