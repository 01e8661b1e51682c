//! Shape-constraint polytopes `C = Δ_M ∩ S`, their closed-form vertex
//! catalogs and linear minimization oracles.
//!
//! Positions and vertex indices are 1-based, matching the usual way these
//! catalogs are written down. Catalog order (which also fixes tie-breaking in
//! the oracles):
//!
//! * index families: ascending index `1..=M`;
//! * convex: every `Left` vertex (mass piled on the right end) for
//!   `k = 1..M`, then every `Right` vertex for `k = 1..M`. The length-`M`
//!   ramps are linear sequences and not extreme, so `k = M` is excluded;
//! * unimodal with mode `k`: windows `(k1, k2)` in lexicographic order.
//!
//! Vertex formulas, for position `p`:
//!
//! | family | vertex | value at `p` |
//! |---|---|---|
//! | simplex | `i` | `[p = i]` |
//! | decreasing | `j` | `1/j` for `p ≤ j` |
//! | increasing | `j` | `1/(M-j+1)` for `p ≥ j` |
//! | concave | `1` / `M` | `2(p-1)/(M(M-1))` / `2(M-p)/(M(M-1))` |
//! | concave | `2..M-1` | tent: `(p-1)·2/((M-1)(j-1))` left of `j`, `(M-p)·2/((M-1)(M-j))` right |
//! | concave increasing | `1` / `i ≥ 2` | uniform / `r_i · min(p-1, i-1)` |
//! | concave decreasing | `1` / `i ≥ 2` | uniform / `r_i · min(M-p, i-1)` |
//! | convex increasing | `i < M` / `M` | `max(0, p-M+i)·2/(i(i+1))` / uniform |
//! | convex decreasing | `i < M` / `M` | `max(0, i+1-p)·2/(i(i+1))` / uniform |
//! | convex | `Left k` / `Right k` | `max(0, p-M+k)/a_k` / `max(0, k+1-p)/a_k`, `a_k = k(k+1)/2` |
//! | unimodal(k) | `(k1, k2)` | `1/(k2-k1+1)` on `k1 ≤ p ≤ k2` |
//!
//! with `r_i = 2/((2M-i)(i-1))`. For `M = 1` every family collapses to the
//! single point `(1)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Simplex,
    Decreasing,
    Increasing,
    Concave,
    Convex,
    ConcaveIncreasing,
    ConcaveDecreasing,
    ConvexIncreasing,
    ConvexDecreasing,
    /// Unimodal with the mode at the given 1-based index.
    UnimodalFixed(usize),
}

impl Shape {
    pub const ALL_FIXED: [Shape; 9] = [
        Shape::Simplex,
        Shape::Decreasing,
        Shape::Increasing,
        Shape::Concave,
        Shape::Convex,
        Shape::ConcaveIncreasing,
        Shape::ConcaveDecreasing,
        Shape::ConvexIncreasing,
        Shape::ConvexDecreasing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Simplex => "simplex",
            Shape::Decreasing => "decreasing",
            Shape::Increasing => "increasing",
            Shape::Concave => "concave",
            Shape::Convex => "convex",
            Shape::ConcaveIncreasing => "concave-increasing",
            Shape::ConcaveDecreasing => "concave-decreasing",
            Shape::ConvexIncreasing => "convex-increasing",
            Shape::ConvexDecreasing => "convex-decreasing",
            Shape::UnimodalFixed(_) => "unimodal-fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// `(0, …, 0, 1, 2, …, k) / a_k`
    Left,
    /// `(k, …, 2, 1, 0, …, 0) / a_k`
    Right,
}

/// Structured vertex identifier; the derived ordering is the catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexId {
    Index(usize),
    Convex { side: Side, k: usize },
    Window { start: usize, end: usize },
}

/// A shape family together with its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeConstraint {
    shape: Shape,
    m: usize,
}

impl ShapeConstraint {
    pub fn new(shape: Shape, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("dimension M must be at least 1"));
        }
        if let Shape::UnimodalFixed(k) = shape {
            if k == 0 || k > m {
                return Err(Error::Argument("unimodal mode must lie in 1..=M"));
            }
        }
        Ok(Self { shape, m })
    }

    pub fn simplex(m: usize) -> Self {
        Self::new(Shape::Simplex, m).expect("M >= 1")
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of vertices.
    pub fn catalog_size(&self) -> usize {
        let m = self.m;
        if m == 1 {
            return 1;
        }
        match self.shape {
            Shape::Convex => 2 * (m - 1),
            Shape::UnimodalFixed(k) => k * (m - k + 1),
            _ => m,
        }
    }

    /// All vertex ids in catalog order.
    pub fn catalog_ids(&self) -> Vec<VertexId> {
        let m = self.m;
        match self.shape {
            Shape::Convex if m > 1 => [Side::Left, Side::Right]
                .into_iter()
                .flat_map(|side| (1..m).map(move |k| VertexId::Convex { side, k }))
                .collect(),
            Shape::Convex => alloc::vec![VertexId::Convex { side: Side::Left, k: 1 }],
            Shape::UnimodalFixed(k) => {
                (1..=k).flat_map(|start| (k..=m).map(move |end| VertexId::Window { start, end })).collect()
            }
            _ => (1..=m).map(VertexId::Index).collect(),
        }
    }

    pub fn is_valid_id(&self, id: VertexId) -> bool {
        let m = self.m;
        match (self.shape, id) {
            (Shape::Convex, VertexId::Convex { side, k }) => {
                if m == 1 {
                    k == 1 && side == Side::Left
                } else {
                    (1..m).contains(&k)
                }
            }
            (Shape::UnimodalFixed(mode), VertexId::Window { start, end }) => {
                start >= 1 && start <= mode && mode <= end && end <= m
            }
            (Shape::Convex | Shape::UnimodalFixed(_), _) => false,
            (_, VertexId::Index(i)) => (1..=m).contains(&i),
            _ => false,
        }
    }

    /// Writes the vertex into `out` (length `M`).
    pub fn write_vertex(&self, id: VertexId, out: &mut [f64]) -> Result<()> {
        if !self.is_valid_id(id) {
            return Err(Error::Argument("vertex id is not valid for this constraint"));
        }
        if out.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: out.len() });
        }
        let m = self.m;
        let mf = m as f64;
        if m == 1 {
            out[0] = 1.0;
            return Ok(());
        }
        let uniform = |out: &mut [f64]| out.iter_mut().for_each(|x| *x = 1.0 / mf);
        // `fill(value_at_position)` with 1-based positions
        let mut fill = |f: &dyn Fn(usize) -> f64| {
            for (p0, o) in out.iter_mut().enumerate() {
                *o = f(p0 + 1);
            }
        };
        match (self.shape, id) {
            (Shape::Simplex, VertexId::Index(i)) => fill(&|p| if p == i { 1.0 } else { 0.0 }),
            (Shape::Decreasing, VertexId::Index(j)) => {
                let v = 1.0 / j as f64;
                fill(&|p| if p <= j { v } else { 0.0 })
            }
            (Shape::Increasing, VertexId::Index(j)) => {
                let v = 1.0 / (m - j + 1) as f64;
                fill(&|p| if p >= j { v } else { 0.0 })
            }
            (Shape::Concave, VertexId::Index(j)) => {
                let c = 2.0 / (mf * (mf - 1.0));
                if j == 1 {
                    fill(&|p| c * (p - 1) as f64)
                } else if j == m {
                    fill(&|p| c * (m - p) as f64)
                } else {
                    let pj = 2.0 / ((mf - 1.0) * (j - 1) as f64);
                    let qj = 2.0 / ((mf - 1.0) * (m - j) as f64);
                    fill(&|p| if p <= j { pj * (p - 1) as f64 } else { qj * (m - p) as f64 })
                }
            }
            (Shape::ConcaveIncreasing, VertexId::Index(i)) => {
                if i == 1 {
                    uniform(out)
                } else {
                    let r = concave_monotone_scale(m, i);
                    fill(&|p| r * (p - 1).min(i - 1) as f64)
                }
            }
            (Shape::ConcaveDecreasing, VertexId::Index(i)) => {
                if i == 1 {
                    uniform(out)
                } else {
                    let r = concave_monotone_scale(m, i);
                    fill(&|p| r * (m - p).min(i - 1) as f64)
                }
            }
            (Shape::ConvexIncreasing, VertexId::Index(i)) => {
                if i == m {
                    uniform(out)
                } else {
                    let c = 2.0 / (i * (i + 1)) as f64;
                    fill(&|p| c * (p + i).saturating_sub(m) as f64)
                }
            }
            (Shape::ConvexDecreasing, VertexId::Index(i)) => {
                if i == m {
                    uniform(out)
                } else {
                    let c = 2.0 / (i * (i + 1)) as f64;
                    fill(&|p| c * (i + 1).saturating_sub(p) as f64)
                }
            }
            (Shape::Convex, VertexId::Convex { side, k }) => {
                let c = 2.0 / (k * (k + 1)) as f64;
                match side {
                    Side::Left => fill(&|p| c * (p + k).saturating_sub(m) as f64),
                    Side::Right => fill(&|p| c * (k + 1).saturating_sub(p) as f64),
                }
            }
            (Shape::UnimodalFixed(_), VertexId::Window { start, end }) => {
                let v = 1.0 / (end - start + 1) as f64;
                fill(&|p| if p >= start && p <= end { v } else { 0.0 })
            }
            _ => unreachable!("validated above"),
        }
        Ok(())
    }

    pub fn vertex_vector(&self, id: VertexId) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; self.m];
        self.write_vertex(id, &mut out)?;
        Ok(out)
    }

    /// Full vertex catalog in catalog order.
    pub fn enumerate_vertices(&self) -> Vec<Vec<f64>> {
        self.catalog_ids().into_iter().map(|id| self.vertex_vector(id).expect("catalog ids are valid")).collect()
    }

    /// `⟨g, v⟩` for one vertex, from its dense form.
    pub fn vertex_dot(&self, id: VertexId, g: &[f64]) -> Result<f64> {
        let v = self.vertex_vector(id)?;
        Ok(crate::numeric::dot(&v, g))
    }

    /// Rows `a` of the inequality system `a·w ≥ 0` that, together with
    /// `Σ w = 1`, defines the set.
    pub fn inequality_rows(&self) -> Vec<Vec<f64>> {
        let m = self.m;
        let mut rows = Vec::new();
        let unit = |entries: &[(usize, f64)]| {
            let mut r = alloc::vec![0.0; m];
            for &(p, v) in entries {
                r[p] += v;
            }
            r
        };
        for p in 0..m {
            rows.push(unit(&[(p, 1.0)]));
        }
        let decreasing = |rows: &mut Vec<Vec<f64>>, range: core::ops::Range<usize>| {
            for p in range {
                rows.push(unit(&[(p, 1.0), (p + 1, -1.0)]));
            }
        };
        let increasing = |rows: &mut Vec<Vec<f64>>, range: core::ops::Range<usize>| {
            for p in range {
                rows.push(unit(&[(p + 1, 1.0), (p, -1.0)]));
            }
        };
        let concave = |rows: &mut Vec<Vec<f64>>, sign: f64| {
            for p in 1..m.saturating_sub(1) {
                rows.push(unit(&[(p, 2.0 * sign), (p - 1, -sign), (p + 1, -sign)]));
            }
        };
        let last = m - 1;
        match self.shape {
            Shape::Simplex => {}
            Shape::Decreasing => decreasing(&mut rows, 0..last),
            Shape::Increasing => increasing(&mut rows, 0..last),
            Shape::Concave => concave(&mut rows, 1.0),
            Shape::Convex => concave(&mut rows, -1.0),
            Shape::ConcaveIncreasing => {
                concave(&mut rows, 1.0);
                increasing(&mut rows, 0..last);
            }
            Shape::ConcaveDecreasing => {
                concave(&mut rows, 1.0);
                decreasing(&mut rows, 0..last);
            }
            Shape::ConvexIncreasing => {
                concave(&mut rows, -1.0);
                increasing(&mut rows, 0..last);
            }
            Shape::ConvexDecreasing => {
                concave(&mut rows, -1.0);
                decreasing(&mut rows, 0..last);
            }
            Shape::UnimodalFixed(k) => {
                increasing(&mut rows, 0..k - 1);
                decreasing(&mut rows, k - 1..last);
            }
        }
        rows
    }

    /// True iff `w` satisfies every defining equality and inequality within `tol`.
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        if w.len() != self.m || w.iter().any(|x| !x.is_finite()) {
            return false;
        }
        if libm::fabs(crate::numeric::sum(w.iter().copied()) - 1.0) > tol {
            return false;
        }
        let m = self.m;
        let nonneg = w.iter().all(|&x| x >= -tol);
        let dec = |r: core::ops::Range<usize>| r.into_iter().all(|p| w[p] - w[p + 1] >= -tol);
        let inc = |r: core::ops::Range<usize>| r.into_iter().all(|p| w[p + 1] - w[p] >= -tol);
        let curv = |sign: f64| (1..m.saturating_sub(1)).all(|p| sign * (2.0 * w[p] - w[p - 1] - w[p + 1]) >= -tol);
        let last = m - 1;
        nonneg
            && match self.shape {
                Shape::Simplex => true,
                Shape::Decreasing => dec(0..last),
                Shape::Increasing => inc(0..last),
                Shape::Concave => curv(1.0),
                Shape::Convex => curv(-1.0),
                Shape::ConcaveIncreasing => curv(1.0) && inc(0..last),
                Shape::ConcaveDecreasing => curv(1.0) && dec(0..last),
                Shape::ConvexIncreasing => curv(-1.0) && inc(0..last),
                Shape::ConvexDecreasing => curv(-1.0) && dec(0..last),
                Shape::UnimodalFixed(k) => inc(0..k - 1) && dec(k - 1..last),
            }
    }

    /// Linear minimization oracle `argmin_{v ∈ V(C)} ⟨g, v⟩`.
    pub fn lp_oracle(&self, g: &[f64]) -> Result<(VertexId, f64)> {
        self.lp_oracle_counted(g).map(|(id, v, _)| (id, v))
    }

    /// [`lp_oracle`](Self::lp_oracle) plus the number of elementary
    /// accumulation steps it performed.
    pub fn lp_oracle_counted(&self, g: &[f64]) -> Result<(VertexId, f64, u64)> {
        if g.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: g.len() });
        }
        if self.m == 1 {
            let id = self.catalog_ids()[0];
            return Ok((id, g[0], 1));
        }
        let mut ops = 0u64;
        let (id, value) = match self.shape {
            Shape::Convex => {
                let (left, ops_l) = ramp_up_values(g);
                let (right, ops_r) = ramp_down_values(g);
                ops += ops_l + ops_r;
                // the full-length ramps are linear sequences, not extreme points
                let (kl, vl) = first_min(&left[..self.m - 1]);
                let (kr, vr) = first_min(&right[..self.m - 1]);
                if vr < vl {
                    (VertexId::Convex { side: Side::Right, k: kr + 1 }, vr)
                } else {
                    (VertexId::Convex { side: Side::Left, k: kl + 1 }, vl)
                }
            }
            Shape::UnimodalFixed(mode) => {
                let prefix = prefix_sums(g);
                ops += self.m as u64;
                let mut best = (VertexId::Window { start: 1, end: mode }, f64::INFINITY);
                for start in 1..=mode {
                    for end in mode..=self.m {
                        ops += 1;
                        let v = (prefix[end] - prefix[start - 1]) / (end - start + 1) as f64;
                        if v < best.1 {
                            best = (VertexId::Window { start, end }, v);
                        }
                    }
                }
                best
            }
            _ => {
                let (values, n_ops) = self.index_family_values(g);
                ops += n_ops;
                let (i, v) = first_min(&values);
                (VertexId::Index(i + 1), v)
            }
        };
        Ok((id, value, ops))
    }

    /// `⟨g, v_i⟩` for every vertex of an index family (`M ≥ 2`), in O(M).
    fn index_family_values(&self, g: &[f64]) -> (Vec<f64>, u64) {
        let m = self.m;
        let mf = m as f64;
        let n = m as u64;
        match self.shape {
            Shape::Simplex => (g.to_vec(), n),
            Shape::Decreasing => {
                let mut acc = 0.0;
                let vals = g
                    .iter()
                    .enumerate()
                    .map(|(p0, x)| {
                        acc += x;
                        acc / (p0 + 1) as f64
                    })
                    .collect();
                (vals, n)
            }
            Shape::Increasing => {
                let suffix = suffix_sums(g);
                let vals = (1..=m).map(|j| suffix[j - 1] / (m - j + 1) as f64).collect();
                (vals, 2 * n)
            }
            Shape::Concave => {
                // left[j] = Σ_{p≤j} (p-1) g_p ; right[j] = Σ_{p>j} (M-p) g_p
                let left = weighted_prefix(g, |p| (p - 1) as f64);
                let right = weighted_suffix_after(g, |p| (m - p) as f64);
                let c = 2.0 / (mf * (mf - 1.0));
                let mut vals = alloc::vec![0.0; m];
                vals[0] = c * left[m];
                vals[m - 1] = c * right[0];
                for j in 2..m {
                    let pj = 2.0 / ((mf - 1.0) * (j - 1) as f64);
                    let qj = 2.0 / ((mf - 1.0) * (m - j) as f64);
                    vals[j - 1] = pj * left[j] + qj * right[j];
                }
                (vals, 3 * n)
            }
            Shape::ConcaveIncreasing => {
                let left = weighted_prefix(g, |p| (p - 1) as f64);
                let tail = weighted_suffix_after(g, |_| 1.0);
                let mut vals = alloc::vec![0.0; m];
                vals[0] = tail[0] / mf;
                for i in 2..=m {
                    vals[i - 1] = concave_monotone_scale(m, i) * (left[i] + (i - 1) as f64 * tail[i]);
                }
                (vals, 3 * n)
            }
            Shape::ConcaveDecreasing => {
                let head = weighted_prefix(g, |_| 1.0);
                let tail = weighted_suffix_after(g, |p| (m - p) as f64);
                let mut vals = alloc::vec![0.0; m];
                vals[0] = head[m] / mf;
                for i in 2..=m {
                    let t = m - i;
                    vals[i - 1] = concave_monotone_scale(m, i) * ((i - 1) as f64 * head[t] + tail[t]);
                }
                (vals, 3 * n)
            }
            Shape::ConvexIncreasing => {
                let (mut vals, ops) = ramp_up_values(g);
                vals[m - 1] = g.iter().sum::<f64>() / mf;
                (vals, ops + n)
            }
            Shape::ConvexDecreasing => {
                let (mut vals, ops) = ramp_down_values(g);
                vals[m - 1] = g.iter().sum::<f64>() / mf;
                (vals, ops + n)
            }
            Shape::Convex | Shape::UnimodalFixed(_) => unreachable!("not an index family"),
        }
    }

    /// Away-step oracle: the active vertex maximizing `⟨g, v⟩` (ties to the
    /// smallest id).
    pub fn away_oracle(&self, active: &[(VertexId, f64)], g: &[f64]) -> Result<VertexId> {
        if active.is_empty() {
            return Err(Error::Argument("active set is empty"));
        }
        let mut best: Option<(VertexId, f64)> = None;
        for &(id, _) in active {
            let v = self.vertex_dot(id, g)?;
            best = match best {
                Some((bid, bv)) if bv > v || (bv == v && bid < id) => Some((bid, bv)),
                _ => Some((id, v)),
            };
        }
        Ok(best.expect("nonempty").0)
    }

    /// Barycentric weights of `w` over the catalog when they can be computed
    /// directly; `None` when no cheap decomposition is available.
    pub fn decompose(&self, w: &[f64]) -> Option<Vec<(VertexId, f64)>> {
        let m = self.m;
        if w.len() != m || !self.contains(w, 1e-10) {
            return None;
        }
        if m == 1 {
            return Some(alloc::vec![(self.catalog_ids()[0], 1.0)]);
        }
        if w.iter().all(|&x| x == w[0]) {
            return Some(self.uniform_decomposition());
        }
        let raw: Vec<(VertexId, f64)> = match self.shape {
            Shape::Simplex => (1..=m).map(|i| (VertexId::Index(i), w[i - 1])).collect(),
            Shape::Decreasing => (1..=m)
                .map(|j| {
                    let next = if j < m { w[j] } else { 0.0 };
                    (VertexId::Index(j), j as f64 * (w[j - 1] - next))
                })
                .collect(),
            Shape::Increasing => (1..=m)
                .map(|j| {
                    let prev = if j > 1 { w[j - 2] } else { 0.0 };
                    (VertexId::Index(j), (m - j + 1) as f64 * (w[j - 1] - prev))
                })
                .collect(),
            Shape::UnimodalFixed(mode) => unimodal_layers(w, mode),
            Shape::Convex => return None,
            _ => {
                if m > 400 {
                    return None;
                }
                let ids = self.catalog_ids();
                let mut a = alloc::vec![0.0; m * m];
                for (c, id) in ids.iter().enumerate() {
                    let v = self.vertex_vector(*id).ok()?;
                    for r in 0..m {
                        a[r * m + c] = v[r];
                    }
                }
                let lam = crate::numeric::solve_dense(&a, w, m, 1e-14)?;
                ids.into_iter().zip(lam).collect()
            }
        };
        let mut out: Vec<(VertexId, f64)> = raw.into_iter().filter(|(_, l)| *l > 1e-15).collect();
        let s: f64 = out.iter().map(|(_, l)| l).sum();
        if !(s > 0.0) {
            return None;
        }
        out.iter_mut().for_each(|(_, l)| *l /= s);
        Some(out)
    }

    /// Representation of `(1/M) 1_M`, which lies in every family.
    pub fn uniform_decomposition(&self) -> Vec<(VertexId, f64)> {
        let m = self.m;
        if m == 1 {
            return alloc::vec![(self.catalog_ids()[0], 1.0)];
        }
        let w = 1.0 / m as f64;
        match self.shape {
            Shape::Simplex => (1..=m).map(|i| (VertexId::Index(i), w)).collect(),
            Shape::Decreasing => alloc::vec![(VertexId::Index(m), 1.0)],
            Shape::Increasing | Shape::ConcaveIncreasing | Shape::ConcaveDecreasing => {
                alloc::vec![(VertexId::Index(1), 1.0)]
            }
            Shape::ConvexIncreasing | Shape::ConvexDecreasing => alloc::vec![(VertexId::Index(m), 1.0)],
            Shape::Concave => alloc::vec![(VertexId::Index(1), 0.5), (VertexId::Index(m), 0.5)],
            Shape::Convex => alloc::vec![
                (VertexId::Convex { side: Side::Left, k: m - 1 }, 0.5),
                (VertexId::Convex { side: Side::Right, k: m - 1 }, 0.5),
            ],
            Shape::UnimodalFixed(_) => alloc::vec![(VertexId::Window { start: 1, end: m }, 1.0)],
        }
    }
}

/// `r_i = 2 / ((2M - i)(i - 1))`
fn concave_monotone_scale(m: usize, i: usize) -> f64 {
    2.0 / ((2 * m - i) as f64 * (i - 1) as f64)
}

/// First index attaining the minimum.
fn first_min(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// `out[t] = Σ_{p ≤ t} g_p`, `out[0] = 0`.
fn prefix_sums(g: &[f64]) -> Vec<f64> {
    weighted_prefix(g, |_| 1.0)
}

/// `out[t] = Σ_{p ≥ t+1} g_p` (0-based start), length `M + 1`.
fn suffix_sums(g: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; g.len() + 1];
    for p0 in (0..g.len()).rev() {
        out[p0] = out[p0 + 1] + g[p0];
    }
    out
}

/// `out[t] = Σ_{p ≤ t} weight(p) g_p` for `t = 0..=M` (1-based `p`).
fn weighted_prefix(g: &[f64], weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; g.len() + 1];
    for p in 1..=g.len() {
        out[p] = out[p - 1] + weight(p) * g[p - 1];
    }
    out
}

/// `out[t] = Σ_{p > t} weight(p) g_p` for `t = 0..=M` (1-based `p`).
fn weighted_suffix_after(g: &[f64], weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let m = g.len();
    let mut out = alloc::vec![0.0; m + 1];
    for t in (0..m).rev() {
        out[t] = out[t + 1] + weight(t + 1) * g[t];
    }
    out
}

/// `⟨g, (0_{M-k}, 1, …, k)⟩ / a_k` for `k = 1..=M`, via
/// `T_k = T_{k-1} + Σ_{p ≥ M-k+1} g_p`.
fn ramp_up_values(g: &[f64]) -> (Vec<f64>, u64) {
    let m = g.len();
    let mut vals = alloc::vec![0.0; m];
    let (mut tail, mut t) = (0.0, 0.0);
    for k in 1..=m {
        tail += g[m - k];
        t += tail;
        vals[k - 1] = t * 2.0 / (k * (k + 1)) as f64;
    }
    (vals, 2 * m as u64)
}

/// `⟨g, (k, …, 1, 0_{M-k})⟩ / a_k` for `k = 1..=M`, via `R_k = R_{k-1} + P_k`.
fn ramp_down_values(g: &[f64]) -> (Vec<f64>, u64) {
    let m = g.len();
    let mut vals = alloc::vec![0.0; m];
    let (mut head, mut r) = (0.0, 0.0);
    for k in 1..=m {
        head += g[k - 1];
        r += head;
        vals[k - 1] = r * 2.0 / (k * (k + 1)) as f64;
    }
    (vals, 2 * m as u64)
}

/// Peels a unimodal sequence into nested windows around `mode`.
fn unimodal_layers(w: &[f64], mode: usize) -> Vec<(VertexId, f64)> {
    let m = w.len();
    let mut rest: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
    let mut out = Vec::new();
    let (mut start, mut end) = (1usize, m);
    loop {
        while start < mode && rest[start - 1] <= 0.0 {
            start += 1;
        }
        while end > mode && rest[end - 1] <= 0.0 {
            end -= 1;
        }
        let level = rest[start - 1..end].iter().copied().fold(f64::INFINITY, f64::min);
        if !(level > 0.0) {
            break;
        }
        for x in &mut rest[start - 1..end] {
            *x -= level;
        }
        out.push((VertexId::Window { start, end }, level * (end - start + 1) as f64));
        // clear exact-zero entries at both ends before the next layer
        if rest[start - 1] <= 1e-300 {
            rest[start - 1] = 0.0;
        }
        if rest[end - 1] <= 1e-300 {
            rest[end - 1] = 0.0;
        }
        if start == mode && end == mode && rest[mode - 1] <= 0.0 {
            break;
        }
    }
    out
}
