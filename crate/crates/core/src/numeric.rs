//! Small numerical kernels shared across modules: compensated summation,
//! the standard normal density and a dense linear solver for tiny systems.

use alloc::vec::Vec;

/// 1/sqrt(2π)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this value an inner product counts as zero.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Uncompensated dot product with eight independent accumulators, so the
/// loop vectorizes. The summation order is fixed, so results are reproducible.
pub fn dot_unrolled(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) * FRAC_1_SQRT_2PI
}

/// Solves `a x = b` for a dense row-major `n x n` matrix by Gaussian
/// elimination with partial pivoting. Returns `None` when a pivot falls below
/// `singular_tol` relative to the largest entry of its column.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize, singular_tol: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(libm::fabs(*x))).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = libm::fabs(m[col * n + col]);
        for r in col + 1..n {
            let v = libm::fabs(m[r * n + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= singular_tol * scale {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let factor = m[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= factor * m[col * n + c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc -= m[row * n + c] * x[c];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}

/// Numerical rank of a dense row-major `rows x cols` matrix (Gaussian
/// elimination with full pivot search per column).
pub fn rank(a: &[f64], rows: usize, cols: usize, tol: f64) -> usize {
    let mut m = a.to_vec();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut piv = r;
        let mut best = libm::fabs(m[r * cols + c]);
        for i in r + 1..rows {
            let v = libm::fabs(m[i * cols + c]);
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= tol {
            continue;
        }
        for k in 0..cols {
            m.swap(r * cols + k, piv * cols + k);
        }
        for i in r + 1..rows {
            let factor = m[i * cols + c] / m[r * cols + c];
            for k in c..cols {
                m[i * cols + k] -= factor * m[r * cols + k];
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = alloc::vec![1.0];
        terms.extend(core::iter::repeat_n(1e-16, 10_000));
        let s = sum(terms.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn solve_dense_small_system() {
        // [2 1; 1 3] x = [3; 5] -> x = [0.8, 1.4]
        let x = solve_dense(&[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0], 2, 1e-14).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve_dense(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2, 1e-12).is_none());
    }

    #[test]
    fn rank_detects_dependence() {
        assert_eq!(rank(&[1.0, 2.0, 2.0, 4.0], 2, 2, 1e-12), 1);
        assert_eq!(rank(&[1.0, 0.0, 0.0, 1.0, 1.0, 1.0], 3, 2, 1e-12), 2);
    }

    #[test]
    fn normal_pdf_at_zero() {
        assert!((normal_pdf(0.0) - 0.3989422804014327).abs() < 1e-16);
    }
}
