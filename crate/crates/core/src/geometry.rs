//! Feasible regions, their linear minimization oracles, the C-norm and sampling.

use crate::linalg::{self, norm_p, top_singular_pair, SingularPair};
use crate::scalar::Scalar;
use crate::simplex::{solve_standard, LpError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use thiserror::Error;

/// Largest vertex count accepted by the polytope gauge LP.
pub const GAUGE_MAX_VERTICES: usize = 64;

const NUCLEAR_TOL: f64 = 1e-10;
// singular value error is roughly the square of the residual
const NUCLEAR_FALLBACK_RESIDUAL: f64 = 1e-5;
const NUCLEAR_SEED: u64 = 0x005E_ED0F_5EED;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("direction has non-finite entries")]
    NonFinite,
    #[error("outside affine hull")]
    OutsideAffineHull,
    #[error("polytope gauge unsupported at this size ({0} vertices, limit {GAUGE_MAX_VERTICES})")]
    GaugeTooLarge(usize),
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionKind {
    /// `{x : ‖x‖_p ≤ radius}`; `p = f64::INFINITY` is the box.
    LpBall { p: f64, radius: f64, dim: usize },
    VertexPolytope { vertices: Vec<Vec<f64>> },
    /// Matrices are flattened row-major.
    NuclearBall { radius: f64, rows: usize, cols: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleRegion {
    kind: RegionKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmoResult<S> {
    pub vertex: Vec<S>,
    pub inner_product: S,
    /// Set when the direction was zero and a canonical vertex was returned.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    Interior,
    Boundary,
    VertexMixture,
}

impl FeasibleRegion {
    pub fn lp_ball(p: f64, radius: f64, dim: usize) -> Result<Self, GeometryError> {
        if !(p >= 1.0) {
            return Err(GeometryError::InvalidRegion(format!("p must be >= 1, got {p}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidRegion(format!("radius must be > 0, got {radius}")));
        }
        if dim == 0 {
            return Err(GeometryError::InvalidRegion("dimension must be >= 1".into()));
        }
        Ok(FeasibleRegion {
            kind: RegionKind::LpBall { p, radius, dim },
        })
    }

    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let Some(first) = vertices.first() else {
            return Err(GeometryError::InvalidRegion("polytope needs at least one vertex".into()));
        };
        let d = first.len();
        if d == 0 {
            return Err(GeometryError::InvalidRegion("vertices must be non-empty vectors".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != d {
                return Err(GeometryError::InvalidRegion(format!(
                    "vertex {i} has dimension {}, expected {d}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::InvalidRegion(format!("vertex {i} is not finite")));
            }
            if vertices[..i].iter().any(|w| w == v) {
                return Err(GeometryError::InvalidRegion(format!("vertex {i} is a duplicate")));
            }
        }
        Ok(FeasibleRegion {
            kind: RegionKind::VertexPolytope { vertices },
        })
    }

    pub fn nuclear_ball(radius: f64, rows: usize, cols: usize) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidRegion(format!("radius must be > 0, got {radius}")));
        }
        if rows == 0 || cols == 0 {
            return Err(GeometryError::InvalidRegion("matrix shape must be non-empty".into()));
        }
        Ok(FeasibleRegion {
            kind: RegionKind::NuclearBall { radius, rows, cols },
        })
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            RegionKind::LpBall { dim, .. } => *dim,
            RegionKind::VertexPolytope { vertices } => vertices[0].len(),
            RegionKind::NuclearBall { rows, cols, .. } => rows * cols,
        }
    }

    fn check_dim(&self, got: usize) -> Result<(), GeometryError> {
        let expected = self.dim();
        if got != expected {
            return Err(GeometryError::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    /// `argmin_{v ∈ C} ⟨direction, v⟩`.
    pub fn lmo<S: Scalar>(&self, direction: &[S]) -> Result<LmoResult<S>, GeometryError> {
        self.check_dim(direction.len())?;
        if direction.iter().any(|g| !g.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let zero_dir = direction.iter().all(|g| *g == S::zero());
        let vertex = match &self.kind {
            RegionKind::LpBall { p, radius, .. } => {
                if zero_dir {
                    return Ok(self.canonical_vertex(direction));
                }
                lp_ball_vertex(direction, *p, *radius)
            }
            RegionKind::VertexPolytope { vertices } => {
                let mut best = 0;
                let mut best_val = None;
                for (k, v) in vertices.iter().enumerate() {
                    let mut s = S::zero();
                    for (g, vi) in direction.iter().zip(v) {
                        s += g.mul_f64(*vi);
                    }
                    if best_val.is_none_or(|b| s < b) {
                        best = k;
                        best_val = Some(s);
                    }
                }
                let vertex: Vec<S> = vertices[best].iter().map(|&v| S::from_f64(v)).collect();
                return Ok(LmoResult {
                    vertex,
                    inner_product: best_val.unwrap_or_default(),
                    degenerate: zero_dir,
                });
            }
            RegionKind::NuclearBall { radius, rows, cols } => {
                if zero_dir {
                    return Ok(self.canonical_vertex(direction));
                }
                nuclear_vertex(direction, *radius, *rows, *cols)
            }
        };
        let inner_product = linalg::dot(direction, &vertex);
        Ok(LmoResult {
            vertex,
            inner_product,
            degenerate: false,
        })
    }

    fn canonical_vertex<S: Scalar>(&self, direction: &[S]) -> LmoResult<S> {
        let v = self.default_start();
        let vertex: Vec<S> = v.iter().map(|&x| S::from_f64(-x)).collect();
        LmoResult {
            inner_product: linalg::dot(direction, &vertex),
            vertex,
            degenerate: true,
        }
    }

    /// Gauge of `½(C − C)` at `x`.
    pub fn c_norm(&self, x: &[f64]) -> Result<f64, GeometryError> {
        self.check_dim(x.len())?;
        match &self.kind {
            RegionKind::LpBall { p, radius, .. } => Ok(norm_p(x, *p) / radius),
            RegionKind::VertexPolytope { vertices } => polytope_gauge(vertices, x),
            RegionKind::NuclearBall { radius, rows, cols } => {
                Ok(nuclear_norm(x, *rows, *cols) / radius)
            }
        }
    }

    /// Membership with an absolute tolerance in the region's natural scale.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, GeometryError> {
        self.check_dim(x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        match &self.kind {
            RegionKind::VertexPolytope { vertices } => Ok(polytope_contains(vertices, x, tol)),
            _ => Ok(self.c_norm(x)? <= 1.0 + tol),
        }
    }

    /// Canonical starting point: the first unit vector scaled to the boundary,
    /// the first vertex, or the rank-one matrix `radius·e₁e₁ᵀ`.
    pub fn default_start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        match &self.kind {
            RegionKind::LpBall { radius, .. } | RegionKind::NuclearBall { radius, .. } => {
                x[0] = *radius;
            }
            RegionKind::VertexPolytope { vertices } => x.copy_from_slice(&vertices[0]),
        }
        x
    }

    /// `max ‖u − w‖₂ / 2` over `u, w ∈ C`, so that `‖d‖₂ ≤ h·‖d‖_C`.
    pub fn half_diameter_l2(&self) -> f64 {
        match &self.kind {
            RegionKind::LpBall { p, radius, dim } => {
                let n = *dim as f64;
                let expo = if p.is_infinite() { 0.5 } else { 0.5 - 1.0 / p };
                radius * n.powf(expo).max(1.0)
            }
            RegionKind::VertexPolytope { vertices } => {
                let mut best: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                        best = best.max(d);
                    }
                }
                best.sqrt() / 2.0
            }
            RegionKind::NuclearBall { radius, .. } => *radius,
        }
    }

    pub fn sample_point(&self, seed: u64, mode: SampleMode) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.kind {
            RegionKind::LpBall { p, radius, dim } => sample_lp(&mut rng, *p, *radius, *dim, mode, self),
            RegionKind::VertexPolytope { vertices } => sample_polytope(&mut rng, vertices, mode),
            RegionKind::NuclearBall { radius, rows, cols } => {
                sample_nuclear(&mut rng, *radius, *rows, *cols, mode, self)
            }
        }
    }
}

fn lp_ball_vertex<S: Scalar>(g: &[S], p: f64, r: f64) -> Vec<S> {
    let rr = S::from_f64(r);
    if p == 1.0 {
        let mut best = 0;
        let mut best_abs = g[0].abs();
        for (i, gi) in g.iter().enumerate().skip(1) {
            if gi.abs() > best_abs {
                best = i;
                best_abs = gi.abs();
            }
        }
        let mut v = vec![S::zero(); g.len()];
        v[best] = if g[best] >= S::zero() { -rr } else { rr };
        return v;
    }
    if p.is_infinite() {
        return g.iter().map(|gi| if *gi >= S::zero() { -rr } else { rr }).collect();
    }
    if p == 2.0 {
        let n = linalg::norm2(g);
        return g.iter().map(|gi| -(rr * *gi / n)).collect();
    }
    // v_i = -r sign(g_i) (|g_i|/‖g‖_q)^{q-1}, evaluated relative to max|g| in log domain
    let qm1 = S::one() / (S::from_f64(p) - S::one());
    let q = qm1 + S::one();
    let gmax = g.iter().fold(S::zero(), |m, x| m.max(x.abs()));
    let mut w = Vec::with_capacity(g.len());
    let mut sum = S::zero();
    for gi in g {
        let a = gi.abs() / gmax;
        if a > S::zero() {
            let wi = (qm1 * a.ln()).exp();
            sum += wi * a;
            w.push(wi);
        } else {
            w.push(S::zero());
        }
    }
    let scale = rr * (-(qm1 / q) * sum.ln()).exp();
    g.iter()
        .zip(w)
        .map(|(gi, wi)| {
            let m = wi * scale;
            if *gi >= S::zero() {
                -m
            } else {
                m
            }
        })
        .collect()
}

fn nuclear_vertex<S: Scalar>(g: &[S], r: f64, rows: usize, cols: usize) -> Vec<S> {
    let gf: Vec<f64> = g.iter().map(|v| v.to_f64()).collect();
    let nnz = gf.iter().filter(|v| **v != 0.0).count();
    let mut pair = if nnz * 4 <= gf.len() {
        let entries: Vec<(usize, usize, f64)> = gf
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (k / cols, k % cols, *v))
            .collect();
        top_singular_pair(
            rows,
            cols,
            |v| {
                let mut out = vec![0.0; rows];
                for &(i, j, a) in &entries {
                    out[i] += a * v[j];
                }
                out
            },
            |u| {
                let mut out = vec![0.0; cols];
                for &(i, j, a) in &entries {
                    out[j] += a * u[i];
                }
                out
            },
            NUCLEAR_TOL,
            10 * rows.max(cols),
            NUCLEAR_SEED,
        )
    } else {
        top_singular_pair(
            rows,
            cols,
            |v| {
                (0..rows)
                    .map(|i| gf[i * cols..(i + 1) * cols].iter().zip(v).map(|(a, b)| a * b).sum())
                    .collect()
            },
            |u| {
                let mut out = vec![0.0; cols];
                for i in 0..rows {
                    for (o, a) in out.iter_mut().zip(&gf[i * cols..(i + 1) * cols]) {
                        *o += a * u[i];
                    }
                }
                out
            },
            NUCLEAR_TOL,
            10 * rows.max(cols),
            NUCLEAR_SEED,
        )
    };
    if pair.residual > NUCLEAR_FALLBACK_RESIDUAL {
        pair = dense_top_pair(&gf, rows, cols);
    }
    let mut v = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            v.push(S::from_f64(-r * pair.u[i] * pair.v[j]));
        }
    }
    v
}

/// Top singular pair from the eigen decomposition of the smaller Gram matrix.
/// Used when power iteration stalls on a small leading spectral gap.
fn dense_top_pair(g: &[f64], rows: usize, cols: usize) -> SingularPair {
    let a = nalgebra::DMatrix::from_row_slice(rows, cols, g);
    let wide = rows <= cols;
    let gram = if wide { &a * a.transpose() } else { a.transpose() * &a };
    let eig = nalgebra::SymmetricEigen::new(gram);
    let k = eig.eigenvalues.imax();
    let top: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let other: Vec<f64> = if wide {
        (a.transpose() * nalgebra::DVector::from_vec(top.clone())).iter().copied().collect()
    } else {
        (&a * nalgebra::DVector::from_vec(top.clone())).iter().copied().collect()
    };
    let sigma = other.iter().map(|x| x * x).sum::<f64>().sqrt();
    let other: Vec<f64> = other.iter().map(|x| if sigma > 0.0 { x / sigma } else { 0.0 }).collect();
    let (u, v) = if wide { (top, other) } else { (other, top) };
    SingularPair {
        sigma,
        u,
        v,
        iterations: 0,
        residual: 0.0,
    }
}

pub fn nuclear_norm(x: &[f64], rows: usize, cols: usize) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, x);
    m.singular_values().iter().sum()
}

/// Compact gauge LP: `min Σα` s.t. `½(Σα_i v_i − Σβ_i v_i) = x`, `Σα = Σβ`, `α, β ≥ 0`.
fn polytope_gauge(vertices: &[Vec<f64>], x: &[f64]) -> Result<f64, GeometryError> {
    let nv = vertices.len();
    if nv > GAUGE_MAX_VERTICES {
        return Err(GeometryError::GaugeTooLarge(nv));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let d = x.len();
    let mut a = Vec::with_capacity(d + 1);
    for k in 0..d {
        let mut row = vec![0.0; 2 * nv];
        for (i, v) in vertices.iter().enumerate() {
            row[i] = 0.5 * v[k];
            row[nv + i] = -0.5 * v[k];
        }
        a.push(row);
    }
    let mut bal = vec![1.0; 2 * nv];
    bal[nv..].iter_mut().for_each(|v| *v = -1.0);
    a.push(bal);
    let mut b = x.to_vec();
    b.push(0.0);
    let mut c = vec![1.0; 2 * nv];
    c[nv..].iter_mut().for_each(|v| *v = 0.0);
    match solve_standard(&a, &b, &c) {
        Ok(sol) => Ok(sol.value),
        Err(LpError::Infeasible) => Err(GeometryError::OutsideAffineHull),
        Err(e) => Err(e.into()),
    }
}

fn polytope_contains(vertices: &[Vec<f64>], x: &[f64], tol: f64) -> bool {
    if vertices.iter().any(|v| v.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)) {
        return true;
    }
    let d = x.len();
    let nv = vertices.len();
    let mut a: Vec<Vec<f64>> = (0..d).map(|k| vertices.iter().map(|v| v[k]).collect()).collect();
    a.push(vec![1.0; nv]);
    let mut b = x.to_vec();
    b.push(1.0);
    match solve_standard(&a, &b, &vec![0.0; nv]) {
        Ok(sol) => {
            // confirm the residual at the requested tolerance
            (0..d).all(|k| {
                let s: f64 = vertices.iter().zip(&sol.x).map(|(v, l)| v[k] * l).sum();
                (s - x[k]).abs() <= tol.max(1e-9) * (1.0 + x[k].abs())
            })
        }
        Err(_) => false,
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

fn sample_lp(
    rng: &mut ChaCha8Rng,
    p: f64,
    r: f64,
    n: usize,
    mode: SampleMode,
    region: &FeasibleRegion,
) -> Vec<f64> {
    if mode == SampleMode::VertexMixture {
        return vertex_mixture(rng, region);
    }
    let mut x: Vec<f64> = if p.is_infinite() {
        (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()
    } else {
        // generalized Gaussian directions are uniform on the ℓp sphere after scaling
        let gamma = Gamma::new(1.0 / p, 1.0).expect("valid gamma shape");
        (0..n)
            .map(|_| {
                let m: f64 = gamma.sample(rng);
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * m.powf(1.0 / p)
            })
            .collect()
    };
    if p.is_infinite() && mode == SampleMode::Boundary {
        let k = rng.random_range(0..n);
        x[k] = if x[k] >= 0.0 { 1.0 } else { -1.0 };
    }
    let nrm = norm_p(&x, p);
    if nrm == 0.0 {
        x = vec![0.0; n];
        x[0] = 1.0;
    } else if !p.is_infinite() || mode == SampleMode::Boundary {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    let scale = match mode {
        SampleMode::Boundary => r,
        _ => r * rng.random::<f64>().powf(1.0 / n as f64),
    };
    x.iter_mut().for_each(|v| *v *= scale);
    x
}

fn vertex_mixture(rng: &mut ChaCha8Rng, region: &FeasibleRegion) -> Vec<f64> {
    let k = rng.random_range(1..=4usize);
    let w = dirichlet(rng, k);
    let n = region.dim();
    let mut x = vec![0.0; n];
    for wi in w {
        let g = gaussian_vec(rng, n);
        let v = region.lmo::<f64>(&g).expect("finite direction").vertex;
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += wi * vi;
        }
    }
    x
}

fn sample_polytope(rng: &mut ChaCha8Rng, vertices: &[Vec<f64>], mode: SampleMode) -> Vec<f64> {
    let nv = vertices.len();
    let d = vertices[0].len();
    let combine = |idx: &[usize], w: &[f64]| {
        let mut x = vec![0.0; d];
        for (&i, wi) in idx.iter().zip(w) {
            for (xk, vk) in x.iter_mut().zip(&vertices[i]) {
                *xk += wi * vk;
            }
        }
        x
    };
    match mode {
        SampleMode::Interior => {
            let w = dirichlet(rng, nv);
            combine(&(0..nv).collect::<Vec<_>>(), &w)
        }
        SampleMode::VertexMixture => {
            let k = rng.random_range(1..=nv.min(3));
            let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..nv)).collect();
            let w = dirichlet(rng, k);
            combine(&idx, &w)
        }
        SampleMode::Boundary => {
            let centroid = combine(&(0..nv).collect::<Vec<_>>(), &vec![1.0 / nv as f64; nv]);
            let coef = gaussian_vec(rng, nv);
            let mut dir = vec![0.0; d];
            for (v, c) in vertices.iter().zip(&coef) {
                for k in 0..d {
                    dir[k] += c * (v[k] - centroid[k]);
                }
            }
            ray_shoot(vertices, &centroid, &dir).unwrap_or(centroid)
        }
    }
}

/// Farthest point of `C` along `c + s·dir`, `s ≥ 0`.
fn ray_shoot(vertices: &[Vec<f64>], c: &[f64], dir: &[f64]) -> Option<Vec<f64>> {
    let nv = vertices.len();
    let d = c.len();
    let mut a = Vec::with_capacity(d + 1);
    for k in 0..d {
        let mut row: Vec<f64> = vertices.iter().map(|v| v[k]).collect();
        row.push(-dir[k]);
        a.push(row);
    }
    let mut last = vec![1.0; nv];
    last.push(0.0);
    a.push(last);
    let mut b = c.to_vec();
    b.push(1.0);
    let mut cost = vec![0.0; nv];
    cost.push(-1.0);
    let sol = solve_standard(&a, &b, &cost).ok()?;
    let s = sol.x[nv];
    // rebuild from the convex weights so the point is exactly a convex combination
    let mut x = vec![0.0; d];
    let tot: f64 = sol.x[..nv].iter().sum();
    for (v, l) in vertices.iter().zip(&sol.x[..nv]) {
        for k in 0..d {
            x[k] += l / tot * v[k];
        }
    }
    if s <= 0.0 {
        return None;
    }
    Some(x)
}

fn sample_nuclear(
    rng: &mut ChaCha8Rng,
    r: f64,
    rows: usize,
    cols: usize,
    mode: SampleMode,
    region: &FeasibleRegion,
) -> Vec<f64> {
    if mode == SampleMode::VertexMixture {
        return vertex_mixture(rng, region);
    }
    let mut x = gaussian_vec(rng, rows * cols);
    let nn = nuclear_norm(&x, rows, cols);
    let scale = match mode {
        SampleMode::Boundary => r / nn,
        _ => r * rng.random::<f64>().powf(1.0 / (rows * cols) as f64) / nn,
    };
    x.iter_mut().for_each(|v| *v *= scale);
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_lmo_example() {
        let c = FeasibleRegion::lp_ball(2.0, 1.0, 2).unwrap();
        let r = c.lmo(&[3.0, 4.0]).unwrap();
        assert!((r.vertex[0] + 0.6).abs() < 1e-15 && (r.vertex[1] + 0.8).abs() < 1e-15);
        assert!((r.inner_product + 5.0).abs() < 1e-14);
    }

    #[test]
    fn l1_lmo_example() {
        let c = FeasibleRegion::lp_ball(1.0, 1.0, 3).unwrap();
        let r = c.lmo(&[1.0, -3.0, 2.0]).unwrap();
        assert_eq!(r.vertex, vec![0.0, 1.0, 0.0]);
        assert_eq!(r.inner_product, -3.0);
    }

    #[test]
    fn l1_ties_pick_lowest_index() {
        let c = FeasibleRegion::lp_ball(1.0, 1.0, 3).unwrap();
        let r = c.lmo(&[2.0, -2.0, 2.0]).unwrap();
        assert_eq!(r.vertex, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn linf_sign_zero_is_positive() {
        let c = FeasibleRegion::lp_ball(f64::INFINITY, 2.0, 3).unwrap();
        let r = c.lmo(&[0.0, -1.0, 1.0]).unwrap();
        assert_eq!(r.vertex, vec![-2.0, 2.0, -2.0]);
    }

    #[test]
    fn zero_direction_is_flagged() {
        let c = FeasibleRegion::lp_ball(3.0, 1.0, 2).unwrap();
        let r = c.lmo(&[0.0, 0.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.vertex, vec![-1.0, 0.0]);
        let nb = FeasibleRegion::nuclear_ball(2.0, 2, 2).unwrap();
        let r = nb.lmo(&[0.0; 4]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.vertex, vec![-2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn l3_lmo_matches_closed_form() {
        let c = FeasibleRegion::lp_ball(3.0, 1.0, 2).unwrap();
        let r = c.lmo(&[1.0, 1.0]).unwrap();
        let e = -(2f64.powf(-1.0 / 3.0));
        assert!((r.vertex[0] - e).abs() < 1e-14 && (r.vertex[1] - e).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let c = FeasibleRegion::lp_ball(2.0, 1.0, 3).unwrap();
        assert!(matches!(
            c.lmo(&[1.0, 2.0]),
            Err(GeometryError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn nuclear_lmo_rank_one() {
        let nb = FeasibleRegion::nuclear_ball(1.0, 2, 2).unwrap();
        let r = nb.lmo(&[3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((r.inner_product + 3.0).abs() < 1e-9);
        assert!((r.vertex[0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn c_norm_examples() {
        let c = FeasibleRegion::lp_ball(1.0, 1.0, 2).unwrap();
        assert_eq!(c.c_norm(&[0.5, -0.5]).unwrap(), 1.0);
        assert_eq!(c.c_norm(&[0.0, 0.0]).unwrap(), 0.0);
        let sq = FeasibleRegion::polytope(vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        assert!((sq.c_norm(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sq.c_norm(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gauge_rejects_outside_hull_and_large_polytopes() {
        let seg = FeasibleRegion::polytope(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(seg.c_norm(&[0.0, 1.0]), Err(GeometryError::OutsideAffineHull));
        let many: Vec<Vec<f64>> = (0..65).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let big = FeasibleRegion::polytope(many).unwrap();
        assert_eq!(big.c_norm(&[1.0, 1.0]), Err(GeometryError::GaugeTooLarge(65)));
    }

    #[test]
    fn polytope_rejects_duplicates() {
        assert!(FeasibleRegion::polytope(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(FeasibleRegion::polytope(vec![]).is_err());
        assert!(FeasibleRegion::lp_ball(0.5, 1.0, 2).is_err());
    }

    #[test]
    fn sampling_modes() {
        let c = FeasibleRegion::lp_ball(2.0, 1.0, 5).unwrap();
        let b = c.sample_point(3, SampleMode::Boundary);
        assert!((norm_p(&b, 2.0) - 1.0).abs() < 1e-9);
        let l1 = FeasibleRegion::lp_ball(1.0, 1.0, 5).unwrap();
        let i = l1.sample_point(4, SampleMode::Interior);
        assert!(norm_p(&i, 1.0) < 1.0);
        assert_eq!(l1.sample_point(9, SampleMode::Interior), l1.sample_point(9, SampleMode::Interior));
    }

    #[test]
    fn polytope_boundary_samples_are_members() {
        let tri = FeasibleRegion::polytope(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        for s in 0..20 {
            let x = tri.sample_point(s, SampleMode::Boundary);
            assert!(tri.contains(&x, 1e-9).unwrap());
            // on one of the three edges
            let on_edge = x[0].abs() < 1e-9 || x[1].abs() < 1e-9 || (x[0] + x[1] - 2.0).abs() < 1e-9;
            assert!(on_edge, "{x:?}");
        }
        assert!(!tri.contains(&[1.5, 1.5], 1e-9).unwrap());
    }
}
