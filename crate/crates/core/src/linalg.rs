//! Small dense helpers. Heavy factorizations go through nalgebra.

use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut s = S::zero();
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

pub fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2_sq<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

pub fn norm2<S: Scalar>(a: &[S]) -> S {
    norm2_sq(a).sqrt()
}

/// ℓp norm in `f64`, p ∈ [1, ∞].
pub fn norm_p(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let m = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// ℓp norm carried out in the scalar type `S`, with the same max-scaling trick.
pub fn norm_p_s<S: Scalar>(x: &[S], p: f64) -> S {
    if p.is_infinite() {
        return x.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return x.iter().fold(S::zero(), |s, v| s + v.abs());
    }
    if p == 2.0 {
        return norm2(x);
    }
    let m = x.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    if m == S::zero() {
        return m;
    }
    let pe = S::from_f64(p);
    let mut s = S::zero();
    for v in x {
        let a = v.abs();
        if a > S::zero() {
            s += (a / m).powf(pe);
        }
    }
    m * s.powf(S::one() / pe)
}

/// Row-major dense matrix of `f64` data.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        if data.len() != rows * cols {
            return None;
        }
        Some(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if rows.iter().any(|v| v.len() != c) {
            return None;
        }
        Some(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|i| {
                let mut s = S::zero();
                for (a, v) in self.row(i).iter().zip(x) {
                    if *a != 0.0 {
                        s += v.mul_f64(*a);
                    }
                }
                s
            })
            .collect()
    }

    pub fn matvec_t<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if *a != 0.0 {
                    *o += yi.mul_f64(*a);
                }
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Largest eigenvalue of AᵀA by power iteration.
pub fn lambda_max_gram(a: &Matrix, tol: f64, max_iter: usize) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    let mut v = seeded_start(a.cols, 0x1A4B);
    let mut est = 0.0;
    for _ in 0..max_iter {
        let w = a.matvec_t(&a.matvec(&v));
        let n = norm2(&w);
        if n == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / n).collect();
        if (n - est).abs() <= tol * n {
            return n;
        }
        est = n;
    }
    est
}

/// Normalized all-ones vector with a small deterministic perturbation.
pub fn seeded_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| 1.0 + 0.1 * (rng.random::<f64>() - 0.5)).collect();
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Top singular triple of a matrix given by its matvec closures.
pub struct SingularPair {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    /// `‖Aᵀu − σv‖ / σ` at the returned pair.
    pub residual: f64,
}

pub fn top_singular_pair<F, G>(
    rows: usize,
    cols: usize,
    apply: F,
    apply_t: G,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> SingularPair
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut v = seeded_start(cols, seed);
    let mut sigma_prev = 0.0;
    let mut u = vec![0.0; rows];
    let mut sigma = 0.0;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let gu = apply(&v);
        sigma = norm2(&gu);
        if sigma == 0.0 {
            break;
        }
        u = gu.iter().map(|x| x / sigma).collect();
        let w = apply_t(&u);
        let nw = norm2(&w);
        if nw == 0.0 {
            break;
        }
        v = w.iter().map(|x| x / nw).collect();
        if (sigma - sigma_prev).abs() <= tol * sigma {
            break;
        }
        sigma_prev = sigma;
    }
    // align u with the final v
    let gu = apply(&v);
    let s = norm2(&gu);
    if s > 0.0 {
        u = gu.iter().map(|x| x / s).collect();
        sigma = s;
    }
    let residual = if sigma > 0.0 {
        let w = apply_t(&u);
        w.iter().zip(&v).map(|(a, b)| (a - sigma * b).powi(2)).sum::<f64>().sqrt() / sigma
    } else {
        0.0
    };
    SingularPair {
        sigma,
        u,
        v,
        iterations: it,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_norm_special_cases() {
        let x = [3.0, -4.0];
        assert_eq!(norm_p(&x, 2.0), 5.0);
        assert_eq!(norm_p(&x, 1.0), 7.0);
        assert_eq!(norm_p(&x, f64::INFINITY), 4.0);
        assert!((norm_p(&[1.0, 1.0], 3.0) - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn gram_eigen_of_diagonal() {
        let a = Matrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((lambda_max_gram(&a, 1e-14, 1000) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn singular_pair_rank_one() {
        let a = Matrix::new(2, 3, vec![1.0, 2.0, 2.0, 2.0, 4.0, 4.0]).unwrap();
        let sp = top_singular_pair(2, 3, |v| a.matvec(v), |u| a.matvec_t(u), 1e-12, 100, 1);
        assert!((sp.sigma - 3.0 * 5f64.sqrt()).abs() < 1e-9);
    }
}
