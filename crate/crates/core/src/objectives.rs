//! Objectives with gradients, Bregman divergences, smoothness constants and
//! certified reference optima.

use crate::geometry::{FeasibleRegion, GeometryError, RegionKind};
use crate::linalg::{self, lambda_max_gram, norm_p_s, Matrix};
use crate::scalar::{from_f64_vec, Scalar};
use thiserror::Error;

const GOLDEN_WIDTH: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("invalid objective: {0}")]
    Invalid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("reference budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveKind {
    /// `½‖x − y‖₂²`
    QuadraticDistance { y: Vec<f64> },
    /// `½‖Ax − y‖₂²`
    LeastSquares { a: Matrix, y: Vec<f64> },
    /// `(1/m) Σ log(1 + exp(−b_i a_iᵀx))`
    Logistic { features: Matrix, labels: Vec<f64> },
    /// `(1/|I|) Σ H_ρ(A_ij − X_ij)` over observed entries, X flattened row-major.
    HuberCompletion {
        observed: Vec<Observation>,
        rho: f64,
        rows: usize,
        cols: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    declared_l: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution<S> {
    pub f_ref: S,
    /// Certified: `f* ≥ lower_bound`.
    pub lower_bound: S,
    pub x_ref: Vec<S>,
    pub method: String,
}

impl<S: Scalar> ReferenceSolution<S> {
    pub fn slack(&self) -> S {
        self.f_ref - self.lower_bound
    }

    pub fn is_closed_form(&self) -> bool {
        self.method.starts_with("closed-form")
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<(), ObjectiveError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ObjectiveError::Invalid(format!("{what} has non-finite entries")));
    }
    Ok(())
}

#[inline]
fn logistic_loss<S: Scalar>(u: S) -> S {
    // log(1 + e^{−u}) = log1p(e^{−|u|}) + max(0, −u)
    (-u.abs()).exp().ln_1p() + (-u).max(S::zero())
}

/// `1/(1 + e^{u})`, evaluated without overflow.
#[inline]
fn sigmoid_neg<S: Scalar>(u: S) -> S {
    if u >= S::zero() {
        let e = (-u).exp();
        e / (S::one() + e)
    } else {
        S::one() / (S::one() + u.exp())
    }
}

#[inline]
fn huber<S: Scalar>(r: S, rho: f64) -> S {
    let a = r.abs();
    let rh = S::from_f64(rho);
    if a <= rh {
        (r * r).mul_f64(0.5)
    } else {
        rh * (a - rh.mul_f64(0.5))
    }
}

#[inline]
fn huber_psi<S: Scalar>(r: S, rho: f64) -> S {
    let rh = S::from_f64(rho);
    r.max(-rh).min(rh)
}

impl Objective {
    pub fn quadratic_distance(y: Vec<f64>) -> Result<Self, ObjectiveError> {
        if y.is_empty() {
            return Err(ObjectiveError::Invalid("target must be non-empty".into()));
        }
        check_finite(&y, "target")?;
        Ok(Objective {
            kind: ObjectiveKind::QuadraticDistance { y },
            declared_l: 1.0,
        })
    }

    pub fn least_squares(a: Matrix, y: Vec<f64>) -> Result<Self, ObjectiveError> {
        if a.rows() != y.len() || a.cols() == 0 {
            return Err(ObjectiveError::Invalid(format!(
                "matrix is {}x{} but target has length {}",
                a.rows(),
                a.cols(),
                y.len()
            )));
        }
        check_finite(a.data(), "matrix")?;
        check_finite(&y, "target")?;
        let l = lambda_max_gram(&a, 1e-12, 10_000).max(f64::MIN_POSITIVE);
        Ok(Objective {
            kind: ObjectiveKind::LeastSquares { a, y },
            declared_l: l,
        })
    }

    pub fn logistic(features: Matrix, labels: Vec<f64>) -> Result<Self, ObjectiveError> {
        if features.rows() != labels.len() || features.rows() == 0 || features.cols() == 0 {
            return Err(ObjectiveError::Invalid(format!(
                "features are {}x{} but there are {} labels",
                features.rows(),
                features.cols(),
                labels.len()
            )));
        }
        if labels.iter().any(|b| *b != 1.0 && *b != -1.0) {
            return Err(ObjectiveError::Invalid("labels must be +1 or -1".into()));
        }
        check_finite(features.data(), "features")?;
        let m = features.rows() as f64;
        let l = (lambda_max_gram(&features, 1e-12, 10_000) / (4.0 * m)).max(f64::MIN_POSITIVE);
        Ok(Objective {
            kind: ObjectiveKind::Logistic { features, labels },
            declared_l: l,
        })
    }

    pub fn huber_completion(
        observed: Vec<Observation>,
        rho: f64,
        rows: usize,
        cols: usize,
    ) -> Result<Self, ObjectiveError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(ObjectiveError::Invalid(format!("huber parameter must be > 0, got {rho}")));
        }
        if observed.is_empty() || rows == 0 || cols == 0 {
            return Err(ObjectiveError::Invalid("need a non-empty shape and observations".into()));
        }
        for o in &observed {
            if o.row >= rows || o.col >= cols || !o.value.is_finite() {
                return Err(ObjectiveError::Invalid(format!(
                    "observation ({}, {}) outside {rows}x{cols} or non-finite",
                    o.row, o.col
                )));
            }
        }
        let l = 1.0 / observed.len() as f64;
        Ok(Objective {
            kind: ObjectiveKind::HuberCompletion {
                observed,
                rho,
                rows,
                cols,
            },
            declared_l: l,
        })
    }

    /// Overrides the default smoothness constant.
    pub fn with_declared_l(mut self, l: f64) -> Result<Self, ObjectiveError> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(ObjectiveError::Invalid(format!("declared L must be > 0, got {l}")));
        }
        self.declared_l = l;
        Ok(self)
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Smoothness constant with respect to the Euclidean norm.
    pub fn declared_l(&self) -> f64 {
        self.declared_l
    }

    /// Smoothness constant with respect to the C-norm of `region`.
    pub fn c_norm_smoothness(&self, region: &FeasibleRegion) -> f64 {
        let h = region.half_diameter_l2();
        self.declared_l * h * h
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ObjectiveKind::QuadraticDistance { y } => y.len(),
            ObjectiveKind::LeastSquares { a, .. } => a.cols(),
            ObjectiveKind::Logistic { features, .. } => features.cols(),
            ObjectiveKind::HuberCompletion { rows, cols, .. } => rows * cols,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(
            self.kind,
            ObjectiveKind::QuadraticDistance { .. } | ObjectiveKind::LeastSquares { .. }
        )
    }

    fn check_input<S: Scalar>(&self, x: &[S]) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::NonFinite);
        }
        Ok(())
    }

    pub fn value<S: Scalar>(&self, x: &[S]) -> Result<S, ObjectiveError> {
        self.check_input(x)?;
        Ok(match &self.kind {
            ObjectiveKind::QuadraticDistance { y } => {
                let mut s = S::zero();
                for (xi, yi) in x.iter().zip(y) {
                    let d = *xi - S::from_f64(*yi);
                    s += d * d;
                }
                s.mul_f64(0.5)
            }
            ObjectiveKind::LeastSquares { a, y } => {
                let r = residual(a, y, x);
                linalg::norm2_sq(&r).mul_f64(0.5)
            }
            ObjectiveKind::Logistic { features, labels } => {
                let z = features.matvec(x);
                let mut s = S::zero();
                for (zi, b) in z.iter().zip(labels) {
                    s += logistic_loss(zi.mul_f64(*b));
                }
                s / S::from_f64(labels.len() as f64)
            }
            ObjectiveKind::HuberCompletion {
                observed, rho, cols, ..
            } => {
                let mut s = S::zero();
                for o in observed {
                    let r = S::from_f64(o.value) - x[o.row * cols + o.col];
                    s += huber(r, *rho);
                }
                s / S::from_f64(observed.len() as f64)
            }
        })
    }

    /// First-order bound on the absolute rounding error of `value(x)` in a
    /// format with unit roundoff `u`. Inner products of length `k` count `k`
    /// roundings each.
    pub fn value_rounding(&self, x: &[f64], u: f64) -> f64 {
        match &self.kind {
            ObjectiveKind::QuadraticDistance { y } => {
                let k = x.len() as f64;
                u * x
                    .iter()
                    .zip(y)
                    .map(|(xi, yi)| (xi - yi).abs() * (xi.abs() + yi.abs() + k * (xi - yi).abs()))
                    .sum::<f64>()
            }
            ObjectiveKind::LeastSquares { a, y } => {
                let k = (a.cols() + a.rows() + 2) as f64;
                let mut s = 0.0;
                for (i, yi) in y.iter().enumerate() {
                    let row = a.row(i);
                    let mag: f64 = row.iter().zip(x).map(|(aij, xj)| (aij * xj).abs()).sum::<f64>() + yi.abs();
                    let r: f64 = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() - yi;
                    s += r.abs() * mag;
                }
                k * u * s
            }
            ObjectiveKind::Logistic { features, labels } => {
                let k = (features.cols() + labels.len() + 4) as f64;
                let mut s = 0.0;
                for (i, b) in labels.iter().enumerate() {
                    let row = features.row(i);
                    let mag: f64 = row.iter().zip(x).map(|(aij, xj)| (aij * xj).abs()).sum();
                    let z: f64 = -b * row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>();
                    // |d/dz log(1 + e^z)| ≤ 1, plus the loss itself
                    s += mag / (1.0 + (-z).exp()) + z.max(0.0) + 1.0;
                }
                k * u * s / labels.len() as f64
            }
            ObjectiveKind::HuberCompletion {
                observed, rho, cols, ..
            } => {
                let k = (observed.len() + 4) as f64;
                let s: f64 = observed
                    .iter()
                    .map(|o| {
                        let xv = x[o.row * cols + o.col];
                        let r = (o.value - xv).abs();
                        r.min(*rho) * (o.value.abs() + xv.abs()) + r * r.min(*rho)
                    })
                    .sum();
                k * u * s / observed.len() as f64
            }
        }
    }

    pub fn value_and_grad<S: Scalar>(&self, x: &[S]) -> Result<(S, Vec<S>), ObjectiveError> {
        self.check_input(x)?;
        Ok(match &self.kind {
            ObjectiveKind::QuadraticDistance { y } => {
                let g: Vec<S> = x.iter().zip(y).map(|(xi, yi)| *xi - S::from_f64(*yi)).collect();
                (linalg::norm2_sq(&g).mul_f64(0.5), g)
            }
            ObjectiveKind::LeastSquares { a, y } => {
                let r = residual(a, y, x);
                let g = a.matvec_t(&r);
                (linalg::norm2_sq(&r).mul_f64(0.5), g)
            }
            ObjectiveKind::Logistic { features, labels } => {
                let m = S::from_f64(labels.len() as f64);
                let z = features.matvec(x);
                let mut s = S::zero();
                let mut coef = Vec::with_capacity(z.len());
                for (zi, b) in z.iter().zip(labels) {
                    let u = zi.mul_f64(*b);
                    s += logistic_loss(u);
                    coef.push(-(sigmoid_neg(u).mul_f64(*b)) / m);
                }
                (s / m, features.matvec_t(&coef))
            }
            ObjectiveKind::HuberCompletion {
                observed, rho, cols, ..
            } => {
                let n = S::from_f64(observed.len() as f64);
                let mut s = S::zero();
                let mut g = vec![S::zero(); x.len()];
                for o in observed {
                    let k = o.row * cols + o.col;
                    let r = S::from_f64(o.value) - x[k];
                    s += huber(r, *rho);
                    g[k] -= huber_psi(r, *rho) / n;
                }
                (s / n, g)
            }
        })
    }

    /// `D_f(y_pt, x) = f(y_pt) − f(x) − ⟨∇f(x), y_pt − x⟩`, in closed form for quadratics.
    pub fn bregman<S: Scalar>(&self, y_pt: &[S], x: &[S]) -> Result<S, ObjectiveError> {
        self.check_input(y_pt)?;
        self.check_input(x)?;
        let d: Vec<S> = y_pt.iter().zip(x).map(|(a, b)| *a - *b).collect();
        Ok(match &self.kind {
            ObjectiveKind::QuadraticDistance { .. } => linalg::norm2_sq(&d).mul_f64(0.5),
            ObjectiveKind::LeastSquares { a, .. } => linalg::norm2_sq(&a.matvec(&d)).mul_f64(0.5),
            _ => {
                let fy = self.value(y_pt)?;
                let (fx, g) = self.value_and_grad(x)?;
                fy - fx - linalg::dot(&g, &d)
            }
        })
    }

    /// Exact minimizer of `f(x + η(v − x))` over `η ∈ [0, 1]`.
    pub fn exact_line_search<S: Scalar>(&self, x: &[S], v: &[S], grad: &[S]) -> S {
        let d: Vec<S> = v.iter().zip(x).map(|(a, b)| *a - *b).collect();
        if d.iter().all(|di| *di == S::zero()) {
            return S::zero();
        }
        let slope = linalg::dot(grad, &d);
        let clip = |e: S| e.max(S::zero()).min(S::one());
        match &self.kind {
            ObjectiveKind::QuadraticDistance { .. } => {
                let den = linalg::norm2_sq(&d);
                clip(-slope / den)
            }
            ObjectiveKind::LeastSquares { a, .. } => {
                let den = linalg::norm2_sq(&a.matvec(&d));
                if den == S::zero() {
                    return if slope < S::zero() { S::one() } else { S::zero() };
                }
                clip(-slope / den)
            }
            ObjectiveKind::Logistic { features, labels } => {
                let z = features.matvec(x);
                let w = features.matvec(&d);
                let m = S::from_f64(labels.len() as f64);
                let phi = |eta: S| {
                    let mut s = S::zero();
                    for ((zi, wi), b) in z.iter().zip(&w).zip(labels) {
                        s += logistic_loss((*zi + eta * *wi).mul_f64(*b));
                    }
                    s / m
                };
                golden_section(phi)
            }
            ObjectiveKind::HuberCompletion {
                observed, rho, cols, ..
            } => {
                let pairs: Vec<(S, S)> = observed
                    .iter()
                    .map(|o| {
                        let k = o.row * cols + o.col;
                        (S::from_f64(o.value) - x[k], d[k])
                    })
                    .collect();
                let n = S::from_f64(observed.len() as f64);
                let phi = |eta: S| {
                    let mut s = S::zero();
                    for (r, dk) in &pairs {
                        s += huber(*r - eta * *dk, *rho);
                    }
                    s / n
                };
                golden_section(phi)
            }
        }
    }
}

fn residual<S: Scalar>(a: &Matrix, y: &[f64], x: &[S]) -> Vec<S> {
    a.matvec(x)
        .into_iter()
        .zip(y)
        .map(|(ax, yi)| ax - S::from_f64(*yi))
        .collect()
}

/// Golden-section search on [0, 1] down to width 1e-12; never worse than η = 0.
fn golden_section<S: Scalar, F: Fn(S) -> S>(phi: F) -> S {
    let inv_phi = S::from_f64(0.618_033_988_749_894_8);
    let mut a = S::zero();
    let mut b = S::one();
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = phi(c);
    let mut fd = phi(d);
    while (b - a).to_f64() > GOLDEN_WIDTH {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = phi(d);
        }
    }
    let mid = (a + b).mul_f64(0.5);
    let f0 = phi(S::zero());
    let f1 = phi(S::one());
    let fm = phi(mid);
    let mut best = (mid, fm);
    if f1 < best.1 {
        best = (S::one(), f1);
    }
    if f0 <= best.1 {
        best = (S::zero(), f0);
    }
    best.0
}

/// Reference optimum with a certified lower bound.
///
/// Quadratic distance over ℓp-balls is solved by projection; every other pair
/// runs FW with exact line search for `budget` iterations and certifies with
/// `f* ≥ max_t (f(x_t) − gap_t)`.
pub fn reference_solution<S: Scalar>(
    obj: &Objective,
    region: &FeasibleRegion,
    budget: usize,
) -> Result<ReferenceSolution<S>, ObjectiveError> {
    if budget == 0 {
        return Err(ObjectiveError::ZeroBudget);
    }
    if obj.dim() != region.dim() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: region.dim(),
            got: obj.dim(),
        });
    }
    if let (ObjectiveKind::QuadraticDistance { y }, RegionKind::LpBall { p, radius, .. }) =
        (&obj.kind, region.kind())
    {
        let (x, method) = project_lp_ball::<S>(y, *p, *radius);
        let (f, g) = obj.value_and_grad(&x)?;
        let lmo = region.lmo(&g)?;
        let gap = gap_of(&g, &x, &lmo.vertex).max(S::zero());
        return Ok(ReferenceSolution {
            f_ref: f,
            lower_bound: f - gap,
            x_ref: x,
            method: method.to_string(),
        });
    }
    match region.kind() {
        RegionKind::LpBall { .. } | RegionKind::NuclearBall { .. } => {
            let fista = accelerated_projection_reference::<S>(obj, region, budget)?;
            let ls = fw_line_search_reference::<S>(obj, region, budget)?;
            Ok(if ls.slack() < fista.slack() { ls } else { fista })
        }
        RegionKind::VertexPolytope { .. } => fw_line_search_reference(obj, region, budget),
    }
}

fn project_region(region: &FeasibleRegion, y: &[f64]) -> Vec<f64> {
    match region.kind() {
        RegionKind::LpBall { p, radius, .. } => project_lp_ball::<f64>(y, *p, *radius).0,
        RegionKind::NuclearBall { radius, rows, cols } => {
            let svd = nalgebra::DMatrix::from_row_slice(*rows, *cols, y).svd(true, true);
            let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
            let shrunk = project_l1::<f64>(&sv, *radius);
            let u = svd.u.expect("requested");
            let vt = svd.v_t.expect("requested");
            let mut out = vec![0.0; rows * cols];
            for (k, s) in shrunk.iter().enumerate().filter(|(_, s)| **s > 0.0) {
                for i in 0..*rows {
                    for j in 0..*cols {
                        out[i * cols + j] += s * u[(i, k)] * vt[(k, j)];
                    }
                }
            }
            out
        }
        RegionKind::VertexPolytope { .. } => unreachable!("no cheap projection"),
    }
}

/// Projected gradient with Nesterov momentum and gradient restarts, run in f64.
/// The lower bound is the best `f − gap` over the iterates, re-evaluated in `S`
/// at the final point.
fn accelerated_projection_reference<S: Scalar>(
    obj: &Objective,
    region: &FeasibleRegion,
    budget: usize,
) -> Result<ReferenceSolution<S>, ObjectiveError> {
    let step = 1.0 / obj.declared_l();
    let mut x = region.default_start();
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut best_lb = f64::NEG_INFINITY;
    let iters = budget.saturating_mul(10);
    for _ in 0..iters {
        let (_, gy) = obj.value_and_grad::<f64>(&y)?;
        let trial: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - step * g).collect();
        let x_next = project_region(region, &trial);
        let (f, g) = obj.value_and_grad::<f64>(&x_next)?;
        let v = region.lmo(&g)?.vertex;
        let gap = gap_of(&g, &x_next, &v);
        best_lb = best_lb.max(f - gap);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        // restart when the gradient mapping opposes the last move
        let restart = y.iter().zip(&x_next).zip(&x).map(|((yi, a), b)| (yi - a) * (a - b)).sum::<f64>() > 0.0;
        let beta = if restart { 0.0 } else { (theta - 1.0) / theta_next };
        y = x_next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        theta = if restart { 1.0 } else { theta_next };
        x = x_next;
        if gap <= 1e-14 * f.abs().max(1.0) {
            break;
        }
    }
    let xs: Vec<S> = from_f64_vec(&x);
    let (f_ref, g) = obj.value_and_grad(&xs)?;
    let v = region.lmo(&g)?.vertex;
    let gap = gap_of(&g, &xs, &v).max(S::zero());
    let lower_bound = (f_ref - gap).max(S::from_f64(best_lb)).min(f_ref);
    Ok(ReferenceSolution {
        f_ref,
        lower_bound,
        x_ref: xs,
        method: "accelerated-projection".to_string(),
    })
}

fn gap_of<S: Scalar>(g: &[S], x: &[S], v: &[S]) -> S {
    let mut s = S::zero();
    for ((gi, xi), vi) in g.iter().zip(x).zip(v) {
        s += *gi * (*xi - *vi);
    }
    s
}

fn fw_line_search_reference<S: Scalar>(
    obj: &Objective,
    region: &FeasibleRegion,
    budget: usize,
) -> Result<ReferenceSolution<S>, ObjectiveError> {
    let mut x: Vec<S> = from_f64_vec(&region.default_start());
    let mut best: Option<(S, Vec<S>)> = None;
    let mut lb: Option<S> = None;
    for k in 0..=budget {
        let (f, g) = obj.value_and_grad(&x)?;
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x.clone()));
        }
        if k == budget {
            break;
        }
        let lmo = region.lmo(&g)?;
        let gap = gap_of(&g, &x, &lmo.vertex);
        let cand = f - gap;
        if lb.is_none_or(|l| cand > l) {
            lb = Some(cand);
        }
        let eta = obj.exact_line_search(&x, &lmo.vertex, &g);
        for (xi, vi) in x.iter_mut().zip(&lmo.vertex) {
            *xi += eta * (*vi - *xi);
        }
    }
    let (f_ref, x_ref) = best.expect("at least one evaluation");
    let lower_bound = lb.expect("budget >= 1").min(f_ref);
    let tight = (f_ref - lower_bound).to_f64() <= 1e-10 * f_ref.to_f64().abs().max(1.0);
    Ok(ReferenceSolution {
        f_ref,
        lower_bound,
        x_ref,
        method: if tight { "fw-line-search" } else { "budgeted" }.to_string(),
    })
}

/// Euclidean projection of `y` onto `{‖x‖_p ≤ r}`.
pub fn project_lp_ball<S: Scalar>(y: &[f64], p: f64, r: f64) -> (Vec<S>, &'static str) {
    let ys: Vec<S> = from_f64_vec(y);
    let rs = S::from_f64(r);
    if norm_p_s(&ys, p) <= rs {
        return (ys, "closed-form:interior");
    }
    if p == 2.0 {
        let n = linalg::norm2(&ys);
        return (ys.iter().map(|v| rs * *v / n).collect(), "closed-form:radial");
    }
    if p.is_infinite() {
        return (ys.iter().map(|v| v.max(-rs).min(rs)).collect(), "closed-form:clip");
    }
    if p == 1.0 {
        return (project_l1(y, r), "closed-form:soft-threshold");
    }
    (project_lp_kkt(y, p, r), "closed-form:kkt")
}

fn project_l1<S: Scalar>(y: &[f64], r: f64) -> Vec<S> {
    let mut u: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let rs = S::from_f64(r);
    let mut cum = S::zero();
    let mut tau = S::zero();
    for (k, uk) in u.iter().enumerate() {
        cum += S::from_f64(*uk);
        let t = (cum - rs) / S::from_f64((k + 1) as f64);
        if S::from_f64(*uk) > t {
            tau = t;
        } else {
            break;
        }
    }
    y.iter()
        .map(|v| {
            let m = (S::from_f64(v.abs()) - tau).max(S::zero());
            if *v >= 0.0 {
                m
            } else {
                -m
            }
        })
        .collect()
}

/// KKT system `s_i + c·s_i^{p−1} = |y_i|`, `Σ s_i^p = r^p`, solved with
/// safeguarded Newton in both the multiplier and the coordinates.
fn project_lp_kkt<S: Scalar>(y: &[f64], p: f64, r: f64) -> Vec<S> {
    let pe = S::from_f64(p);
    let pm1 = pe - S::one();
    let pm2 = pe - S::from_f64(2.0);
    let a: Vec<S> = y.iter().map(|v| S::from_f64(v.abs())).collect();
    let rp = S::from_f64(r).powf(pe);
    let tol = 16.0 * S::EPSILON;
    let pow = |s: S, e: S| if s > S::zero() { s.powf(e) } else { S::zero() };

    let solve = |ai: S, c: S| -> S {
        if ai == S::zero() {
            return S::zero();
        }
        let mut lo = S::zero();
        let mut hi = ai;
        let mut s = ai;
        for _ in 0..300 {
            let sp = pow(s, pm1);
            let h = s + c * sp - ai;
            if h > S::zero() {
                hi = s;
            } else {
                lo = s;
            }
            let dh = S::one() + c * pm1 * pow(s, pm2);
            let mut next = s - h / dh;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = (lo + hi).mul_f64(0.5);
            }
            let step = (next - s).abs();
            s = next;
            if step.to_f64() <= tol * ai.to_f64() || (hi - lo).to_f64() <= tol * ai.to_f64() {
                break;
            }
        }
        s
    };
    let phi = |c: S| -> (S, S, Vec<S>) {
        let s: Vec<S> = a.iter().map(|ai| solve(*ai, c)).collect();
        let mut val = -rp;
        let mut der = S::zero();
        for si in &s {
            if *si > S::zero() {
                let sp1 = pow(*si, pm1);
                val += sp1 * *si;
                let ds = -sp1 / (S::one() + c * pm1 * sp1 / *si);
                der += pe * sp1 * ds;
            }
        }
        (val, der, s)
    };

    let mut lo = S::zero();
    let mut hi = S::one();
    let (mut v_hi, _, _) = phi(hi);
    while v_hi > S::zero() {
        lo = hi;
        hi = hi.mul_f64(2.0);
        v_hi = phi(hi).0;
    }
    let mut c = (lo + hi).mul_f64(0.5);
    let mut s_best = Vec::new();
    for _ in 0..400 {
        let (val, der, s) = phi(c);
        s_best = s;
        if val.abs().to_f64() <= tol * rp.to_f64() {
            break;
        }
        if val > S::zero() {
            lo = c;
        } else {
            hi = c;
        }
        let mut next = c - val / der;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo + hi).mul_f64(0.5);
        }
        if (hi - lo).to_f64() <= tol * hi.to_f64() {
            break;
        }
        c = next;
    }
    y.iter()
        .zip(s_best)
        .map(|(v, s)| if *v >= 0.0 { s } else { -s })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;

    #[test]
    fn quadratic_value_and_grad() {
        let o = Objective::quadratic_distance(vec![1.0, 0.0]).unwrap();
        let (f, g) = o.value_and_grad(&[0.0, 0.0]).unwrap();
        assert_eq!(f, 0.5);
        assert_eq!(g, vec![-1.0, 0.0]);
    }

    #[test]
    fn logistic_zero_feature() {
        let f = Matrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        let o = Objective::logistic(f, vec![1.0]).unwrap();
        let (v, g) = o.value_and_grad(&[0.3, -2.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn huber_example() {
        let o = Objective::huber_completion(vec![Observation { row: 0, col: 0, value: 2.0 }], 1.0, 1, 1).unwrap();
        let (v, g) = o.value_and_grad(&[0.0]).unwrap();
        assert_eq!(v, 1.5);
        assert_eq!(g, vec![-1.0]);
    }

    #[test]
    fn bregman_examples() {
        let q = Objective::quadratic_distance(vec![0.0, 0.0]).unwrap();
        assert_eq!(q.bregman(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(q.bregman(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
        let f = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let l = Objective::logistic(f, vec![1.0]).unwrap();
        let d = l.bregman(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let expect = (1.0 + (-1.0f64).exp()).ln() - 2f64.ln() + 0.5;
        assert!((d - expect).abs() < 1e-15);
        assert!((d - 0.120).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = Matrix::new(1, 1, vec![1.0]).unwrap();
        assert!(Objective::logistic(f, vec![0.5]).is_err());
        assert!(Objective::huber_completion(vec![], 1.0, 1, 1).is_err());
        let q = Objective::quadratic_distance(vec![1.0]).unwrap();
        assert_eq!(q.value_and_grad(&[f64::NAN]).unwrap_err(), ObjectiveError::NonFinite);
    }

    #[test]
    fn line_search_clips() {
        let q = Objective::quadratic_distance(vec![2.0, 0.0]).unwrap();
        let x = [0.0, 0.0];
        let (_, g) = q.value_and_grad(&x).unwrap();
        assert_eq!(q.exact_line_search(&x, &[1.0, 0.0], &g), 1.0);
        assert_eq!(q.exact_line_search(&x, &x, &g), 0.0);
    }

    #[test]
    fn reference_examples() {
        let b2 = FeasibleRegion::lp_ball(2.0, 1.0, 2).unwrap();
        let y = vec![0.72, 0.96];
        let q = Objective::quadratic_distance(y).unwrap();
        let r = reference_solution::<f64>(&q, &b2, 1).unwrap();
        assert!((r.f_ref - 0.02).abs() < 1e-15);
        assert!(r.slack() <= 1e-10);
        let q = Objective::quadratic_distance(vec![0.3, 0.4]).unwrap();
        let r = reference_solution::<f64>(&q, &b2, 1).unwrap();
        assert_eq!(r.f_ref, 0.0);
        let b1 = FeasibleRegion::lp_ball(1.0, 1.0, 2).unwrap();
        let q = Objective::quadratic_distance(vec![0.9, 0.9]).unwrap();
        let r = reference_solution::<f64>(&q, &b1, 1).unwrap();
        assert!((r.x_ref[0] - 0.5).abs() < 1e-15 && (r.f_ref - 0.16).abs() < 1e-15);
    }

    #[test]
    fn kkt_projection_is_on_sphere_and_optimal() {
        for &p in &[1.01, 1.1, 1.5, 3.0, 7.0] {
            let y = vec![0.9, -0.7, 0.4, 1.3];
            let (x, _) = project_lp_ball::<Dd>(&y, p, 1.0);
            let n = norm_p_s(&x, p);
            assert!((n - Dd::ONE).abs().to_f64() < 1e-28, "p={p} norm={}", n.to_f64());
            let q = Objective::quadratic_distance(y.clone()).unwrap();
            let c = FeasibleRegion::lp_ball(p, 1.0, 4).unwrap();
            let (_, g) = q.value_and_grad(&x).unwrap();
            let v = c.lmo(&g).unwrap().vertex;
            let gap = gap_of(&g, &x, &v);
            assert!(gap.to_f64().abs() < 1e-26, "p={p} gap={}", gap.to_f64());
        }
    }

    #[test]
    fn fw_reference_certifies() {
        let a = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 2.0, 1.0, 1.0]).unwrap();
        let o = Objective::least_squares(a, vec![3.0, 1.0, 0.0]).unwrap();
        let c = FeasibleRegion::lp_ball(1.0, 1.0, 2).unwrap();
        let r = reference_solution::<f64>(&o, &c, 500).unwrap();
        assert!(r.lower_bound <= r.f_ref);
    }
}
