//! Seeded instance generators for every preset.

use crate::config::{DataSource, ObjectiveSpec, Preset, RegionSpec, Schema};
use crate::data::{load_dataset, zscore, zscore_strided, Dataset};
use crate::error::{HarnessError, Result};
use fwlab_core::linalg::norm_p;
use fwlab_core::theory::{FaceSpec, Theorem};
use fwlab_core::{FeasibleRegion, Matrix, Measure, Objective, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A bound to check: theorem, the series it bounds, the series its anchor is read from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub theorem: Theorem,
    pub measure: Measure,
    pub anchor: Measure,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub region: FeasibleRegion,
    pub objective: Objective,
    /// Closed-form minimizer where the construction determines it.
    pub x_star: Option<Vec<f64>>,
    /// Optimal face of the ℓ1-ball for the polytope construction.
    pub face: Option<FaceSpec>,
    pub bounds: Vec<BoundCheck>,
    pub description: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform `]0, 1]` entries scaled to `‖y‖_norm = target`.
fn positive_with_norm(rng: &mut ChaCha8Rng, n: usize, norm: f64, target: f64) -> Vec<f64> {
    let y: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
    let s = target / norm_p(&y, norm);
    y.into_iter().map(|v| v * s).collect()
}

fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn bc(theorem: Theorem, measure: Measure, anchor: Measure) -> BoundCheck {
    BoundCheck { theorem, measure, anchor }
}

fn geo(e: fwlab_core::GeometryError) -> HarnessError {
    HarnessError::Validation(e.to_string())
}

fn obj_err(e: fwlab_core::ObjectiveError) -> HarnessError {
    HarnessError::Validation(e.to_string())
}

/// `‖y‖_q = 1 + λ` for `p ≤ 2`, `n^{1/q−1/p} + λ` otherwise.
fn strong_instance(p: f64, n: usize, lambda: f64, seed: u64) -> Result<Instance> {
    let q = conj(p);
    let base = if p <= 2.0 { 1.0 } else { (n as f64).powf(1.0 / q - 1.0 / p) };
    let y = positive_with_norm(&mut rng(seed), n, q, base + lambda);
    let bounds = if p <= 2.0 {
        vec![
            bc(Theorem::Strong1, Measure::PrimalDual, Measure::PrimalDual),
            bc(Theorem::Strong1MinGap, Measure::MinGap, Measure::PrimalDual),
        ]
    } else {
        vec![
            bc(Theorem::StrongR, Measure::PrimalDual, Measure::PrimalDual),
            bc(Theorem::StrongRMinGap, Measure::MinGap, Measure::PrimalDual),
        ]
    };
    Ok(Instance {
        region: FeasibleRegion::lp_ball(p, 1.0, n).map_err(geo)?,
        objective: Objective::quadratic_distance(y).map_err(obj_err)?,
        x_star: None,
        face: None,
        bounds,
        description: format!("l{p}-ball, n = {n}, |y|_q = {}", base + lambda),
    })
}

/// `z` on the face `{1, …, ⌈n/2⌉ − 1}` (0-based) with `z₁ = 1 − ρ`, `y = κv + z`.
pub fn polytope_instance(rho: f64, kappa: f64, n: usize, seed: u64) -> Result<Instance> {
    let mut r = rng(seed);
    let half = n.div_ceil(2);
    let mut z = vec![0.0; n];
    z[1] = 1.0 - rho;
    let w: Vec<f64> = (2..half).map(|_| 1.0 - r.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    for (i, wi) in (2..half).zip(&w) {
        z[i] = rho * wi / total;
    }
    let support: Vec<usize> = (1..half).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| if support.contains(&i) { kappa + z[i] } else { z[i] })
        .collect();
    Ok(Instance {
        region: FeasibleRegion::lp_ball(1.0, 1.0, n).map_err(geo)?,
        objective: Objective::quadratic_distance(y).map_err(obj_err)?,
        face: Some(FaceSpec {
            signs: vec![1.0; support.len()],
            support,
            radius: 1.0,
        }),
        x_star: Some(z),
        bounds: vec![bc(Theorem::RelaxedGaps, Measure::Subopt, Measure::Subopt)],
        description: format!("l1-ball, n = {n}, rho = {rho}, kappa = {kappa}"),
    })
}

/// Stand-in for a small tabular regression set: 506 rows, 13 correlated
/// features driven by 3 latent factors.
fn synthetic_regression(seed: u64) -> (Matrix, Vec<f64>) {
    let (m, n, k) = (506, 13, 3);
    let mut r = rng(seed);
    let mut g = || -> f64 { r.sample(StandardNormal) };
    let load: Vec<f64> = (0..n * k).map(|_| g()).collect();
    let w: Vec<f64> = (0..n).map(|_| g()).collect();
    let mut a = vec![0.0; m * n];
    let mut y = vec![0.0; m];
    for i in 0..m {
        let h: Vec<f64> = (0..k).map(|_| g()).collect();
        for j in 0..n {
            let v: f64 = (0..k).map(|c| load[j * k + c] * h[c]).sum::<f64>() + 0.5 * g();
            a[i * n + j] = v;
        }
        y[i] = (0..n).map(|j| a[i * n + j] * w[j]).sum::<f64>() + 2.0 * g();
    }
    (Matrix::new(m, n, a).expect("m·n"), y)
}

/// Gaussian features with a planted 10-sparse separator; 500 × 200.
fn synthetic_logistic(seed: u64) -> (Matrix, Vec<f64>) {
    let (m, n, s) = (500, 200, 10);
    let mut r = rng(seed);
    let mut w = vec![0.0; n];
    let mut placed = 0;
    while placed < s {
        let i = r.random_range(0..n);
        if w[i] == 0.0 {
            let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            w[i] = sign * (1.0 + r.random::<f64>());
            placed += 1;
        }
    }
    let a: Vec<f64> = (0..m * n).map(|_| r.sample(StandardNormal)).collect();
    let labels = (0..m)
        .map(|i| {
            let noise: f64 = r.sample(StandardNormal);
            let s: f64 = (0..n).map(|j| a[i * n + j] * w[j]).sum::<f64>() + 0.5 * noise;
            if s >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    (Matrix::new(m, n, a).expect("m·n"), labels)
}

/// Rank-5 100 × 120 matrix plus noise, each entry observed with probability 0.1.
fn synthetic_completion(seed: u64) -> (Vec<Observation>, usize, usize) {
    let (rows, cols, rank) = (100, 120, 5);
    let mut r = rng(seed);
    let u: Vec<f64> = (0..rows * rank).map(|_| r.sample(StandardNormal)).collect();
    let v: Vec<f64> = (0..cols * rank).map(|_| r.sample(StandardNormal)).collect();
    let scale = 1.0 / (rank as f64).sqrt();
    let mut observed = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let noise: f64 = r.sample(StandardNormal);
            let keep = r.random::<f64>() < 0.1;
            if keep {
                let val = scale * (0..rank).map(|c| u[i * rank + c] * v[j * rank + c]).sum::<f64>() + 0.1 * noise;
                observed.push(Observation { row: i, col: j, value: val });
            }
        }
    }
    (observed, rows, cols)
}

fn dense_source(src: &DataSource, seed: u64, synth: fn(u64) -> (Matrix, Vec<f64>)) -> Result<(Matrix, Vec<f64>, String)> {
    match &src.data {
        None => {
            let (a, y) = synth(seed);
            Ok((a, y, "synthetic".into()))
        }
        Some(path) => {
            let schema = src.schema.unwrap_or(Schema::DenseCsv);
            match load_dataset(path, schema, src.target_column.as_deref(), src.normalize)? {
                Dataset::Dense { features, targets, .. } => Ok((features, targets, path.display().to_string())),
                Dataset::Triplets { .. } => Err(HarnessError::Validation("expected dense data".into())),
            }
        }
    }
}

/// Least-squares minimizer of `‖Ax − y‖₂`.
pub fn unconstrained_ls(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let am = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.data());
    let yv = nalgebra::DVector::from_column_slice(y);
    let sol = am
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map_err(|e| HarnessError::Numerical(format!("least squares: {e}")))?;
    Ok(sol.iter().copied().collect())
}

pub fn synth_instance(preset: &Preset, seed: u64) -> Result<Instance> {
    match preset {
        Preset::Strong1 { p, n, lambda, .. } | Preset::StrongR { p, n, lambda, .. } => strong_instance(*p, *n, *lambda, seed),
        Preset::Ablation { n, lambda, .. } => strong_instance(2.0, *n, *lambda, seed),
        Preset::Weak { p, n, .. } => {
            let y = positive_with_norm(&mut rng(seed), *n, *p, 1.0);
            Ok(Instance {
                region: FeasibleRegion::lp_ball(*p, 1.0, *n).map_err(geo)?,
                x_star: Some(y.clone()),
                objective: Objective::quadratic_distance(y).map_err(obj_err)?,
                face: None,
                bounds: vec![bc(Theorem::Weak, Measure::Subopt, Measure::Subopt)],
                description: format!("l{p}-ball, n = {n}, |y|_p = 1"),
            })
        }
        Preset::Gaps { rho, n, .. } => {
            let y = positive_with_norm(&mut rng(seed), *n, 1.0, 1.0 - rho);
            Ok(Instance {
                region: FeasibleRegion::lp_ball(1.0, 1.0, *n).map_err(geo)?,
                x_star: Some(y.clone()),
                objective: Objective::quadratic_distance(y).map_err(obj_err)?,
                face: None,
                bounds: vec![bc(Theorem::Gaps, Measure::Subopt, Measure::Subopt)],
                description: format!("l1-ball, n = {n}, |y|_1 = {}", 1.0 - rho),
            })
        }
        Preset::Polytope { rho, kappa, n, .. } | Preset::Linesearch { rho, kappa, n, .. } => {
            polytope_instance(*rho, *kappa, *n, seed)
        }
        Preset::Regression {
            source, p, beta_factor, ..
        } => {
            let (mut a, mut y, origin) = dense_source(source, seed, synthetic_regression)?;
            if source.data.is_none() && source.normalize {
                let (m, n) = (a.rows(), a.cols());
                let mut d = a.data().to_vec();
                for j in 0..n {
                    zscore_strided(&mut d[j..], n, m);
                }
                a = Matrix::new(m, n, d).expect("same shape");
            }
            if source.normalize {
                zscore(&mut y);
            }
            let x_unc = unconstrained_ls(&a, &y)?;
            let beta = beta_factor * norm_p(&x_unc, *p);
            if !(beta > 0.0) {
                return Err(HarnessError::Numerical("unconstrained optimum is 0".into()));
            }
            let n = a.cols();
            Ok(Instance {
                region: FeasibleRegion::lp_ball(*p, beta, n).map_err(geo)?,
                objective: Objective::least_squares(a, y).map_err(obj_err)?,
                x_star: (*beta_factor >= 1.0).then_some(x_unc),
                face: None,
                bounds: vec![],
                description: format!("{origin}, l{p}-ball, beta = {beta_factor}·|x_unc|_p = {beta}"),
            })
        }
        Preset::Logistic { source, radius, .. } => {
            let (mut a, labels, origin) = dense_source(source, seed, synthetic_logistic)?;
            if source.data.is_none() && source.normalize {
                let (m, n) = (a.rows(), a.cols());
                let mut d = a.data().to_vec();
                for j in 0..n {
                    zscore_strided(&mut d[j..], n, m);
                }
                a = Matrix::new(m, n, d).expect("same shape");
            }
            let labels = labels.iter().map(|b| if *b > 0.0 { 1.0 } else { -1.0 }).collect();
            let n = a.cols();
            Ok(Instance {
                region: FeasibleRegion::lp_ball(1.0, *radius, n).map_err(geo)?,
                objective: Objective::logistic(a, labels).map_err(obj_err)?,
                x_star: None,
                face: None,
                bounds: vec![],
                description: format!("{origin}, l1-ball radius {radius}"),
            })
        }
        Preset::Completion {
            source, rho_huber, beta, ..
        } => {
            let (observed, rows, cols, origin) = match &source.data {
                None => {
                    let (o, r, c) = synthetic_completion(seed);
                    (o, r, c, "synthetic".to_string())
                }
                Some(path) => match load_dataset(path, Schema::TripletCsv, None, false)? {
                    Dataset::Triplets { observed, rows, cols } => (observed, rows, cols, path.display().to_string()),
                    Dataset::Dense { .. } => unreachable!("triplet schema"),
                },
            };
            Ok(Instance {
                region: FeasibleRegion::nuclear_ball(*beta, rows, cols).map_err(geo)?,
                objective: Objective::huber_completion(observed, *rho_huber, rows, cols).map_err(obj_err)?,
                x_star: None,
                face: None,
                bounds: vec![],
                description: format!("{origin}, {rows}x{cols}, nuclear radius {beta}"),
            })
        }
        Preset::Custom { region, objective } => {
            let region = match region {
                RegionSpec::Lp { p, radius, n } => FeasibleRegion::lp_ball(*p, *radius, *n),
                RegionSpec::Polytope { vertices } => FeasibleRegion::polytope(vertices.clone()),
                RegionSpec::Nuclear { radius, rows, cols } => FeasibleRegion::nuclear_ball(*radius, *rows, *cols),
            }
            .map_err(geo)?;
            let objective = match objective {
                ObjectiveSpec::Quadratic { y } => Objective::quadratic_distance(y.clone()),
                ObjectiveSpec::LeastSquares { a, b } => {
                    let m = Matrix::from_rows(a).ok_or_else(|| HarnessError::Validation("ragged matrix rows".into()))?;
                    Objective::least_squares(m, b.clone())
                }
            }
            .map_err(obj_err)?;
            if objective.dim() != region.dim() {
                return Err(HarnessError::Validation(format!(
                    "objective has dimension {} but region has {}",
                    objective.dim(),
                    region.dim()
                )));
            }
            Ok(Instance {
                region,
                objective,
                x_star: None,
                face: None,
                bounds: vec![],
                description: "custom".into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fwlab_core::ObjectiveKind;

    fn target(inst: &Instance) -> Vec<f64> {
        match inst.objective.kind() {
            ObjectiveKind::QuadraticDistance { y } => y.clone(),
            _ => panic!(),
        }
    }

    #[test]
    fn gaps_norm_and_optimum() {
        let inst = synth_instance(&Preset::Gaps { rho: 0.3, n: 100, ell: 4 }, 5).unwrap();
        let y = target(&inst);
        assert!((norm_p(&y, 1.0) - 0.7).abs() < 1e-12);
        assert_eq!(inst.x_star.as_deref(), Some(&y[..]));
    }

    #[test]
    fn strong1_norm() {
        let inst = synth_instance(
            &Preset::Strong1 {
                p: 2.0,
                n: 100,
                lambda: 0.2,
                ell: 4,
            },
            9,
        )
        .unwrap();
        assert!((norm_p(&target(&inst), 2.0) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn polytope_construction() {
        let (rho, kappa) = (0.1, 0.01);
        let inst = polytope_instance(rho, kappa, 100, 3).unwrap();
        let z = inst.x_star.clone().unwrap();
        let y = target(&inst);
        assert_eq!(z[0], 0.0);
        assert_eq!(z[1], 1.0 - rho);
        assert!((norm_p(&z, 1.0) - 1.0).abs() < 1e-12);
        let face = inst.face.as_ref().unwrap();
        for i in 0..100 {
            let v = if face.support.contains(&i) { 1.0 } else { 0.0 };
            assert_eq!(y[i], kappa * v + z[i]);
            assert_eq!(z[i] > 0.0, face.support.contains(&i));
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let p = Preset::Completion {
            source: DataSource::default(),
            rho_huber: 1.0,
            beta: 50.0,
            ell: 4,
        };
        let a = synth_instance(&p, 11).unwrap();
        let b = synth_instance(&p, 11).unwrap();
        assert_eq!(a.objective, b.objective);
        let c = synth_instance(&p, 12).unwrap();
        assert_ne!(a.objective, c.objective);
    }

    #[test]
    fn regression_boundary_factor() {
        let p = Preset::Regression {
            source: DataSource::default(),
            p: 2.0,
            beta_factor: 1.5,
            ell: 4,
        };
        let inst = synth_instance(&p, 2).unwrap();
        let x = inst.x_star.unwrap();
        let beta = match inst.region.kind() {
            fwlab_core::RegionKind::LpBall { radius, .. } => *radius,
            _ => panic!(),
        };
        assert!((norm_p(&x, 2.0) * 1.5 - beta).abs() < 1e-12 * beta);
    }
}
