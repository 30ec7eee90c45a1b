//! Frank-Wolfe with pluggable step-size rules.

use crate::geometry::{FeasibleRegion, GeometryError};
use crate::linalg;
use crate::measures::PrimalDualState;
use crate::objectives::{Objective, ObjectiveError, ObjectiveKind, ReferenceSolution};
use crate::scalar::{to_f64_vec, Scalar};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FwError {
    #[error("invalid step rule: {0}")]
    InvalidRule(String),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("start point is not feasible")]
    InfeasibleStart,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// `η_t = ℓ/(t + ℓ)`
    OpenLoop { ell: u32 },
    ExactLineSearch,
    /// `min{1, gap/(L‖x − v‖₂²)}`
    ShortStep { l: f64 },
}

impl StepRule {
    pub fn open_loop(ell: u32) -> Result<Self, FwError> {
        if ell == 0 {
            return Err(FwError::InvalidRule("open-loop ell must be >= 1".into()));
        }
        Ok(StepRule::OpenLoop { ell })
    }

    pub fn short_step(l: f64) -> Result<Self, FwError> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(FwError::InvalidRule(format!("short-step L must be > 0, got {l}")));
        }
        Ok(StepRule::ShortStep { l })
    }

    pub fn label(&self) -> String {
        match self {
            StepRule::OpenLoop { ell } => format!("open-loop-{ell}"),
            StepRule::ExactLineSearch => "line-search".into(),
            StepRule::ShortStep { .. } => "short-step".into(),
        }
    }

    pub fn ell(&self) -> Option<u32> {
        match self {
            StepRule::OpenLoop { ell } => Some(*ell),
            _ => None,
        }
    }
}

/// `ℓ/(t + ℓ)` in `f64`.
pub fn open_loop_eta(ell: u32, t: usize) -> f64 {
    ell as f64 / (t as f64 + ell as f64)
}

/// Step size at iteration `t` given the current point, LMO vertex, gradient and gap.
pub fn step_size<S: Scalar>(
    rule: &StepRule,
    t: usize,
    obj: &Objective,
    x: &[S],
    v: &[S],
    grad: &[S],
    gap: S,
) -> S {
    let zero_dir = x.iter().zip(v).all(|(a, b)| a == b);
    match rule {
        StepRule::OpenLoop { ell } => {
            let l = S::from_f64(*ell as f64);
            l / (S::from_f64(t as f64) + l)
        }
        _ if zero_dir => S::zero(),
        StepRule::ExactLineSearch => obj.exact_line_search(x, v, grad),
        StepRule::ShortStep { l } => {
            let mut d2 = S::zero();
            for (a, b) in x.iter().zip(v) {
                let d = *a - *b;
                d2 += d * d;
            }
            (gap / (d2.mul_f64(*l))).max(S::zero()).min(S::one())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord<S> {
    pub t: usize,
    pub eta: S,
    pub f: S,
    pub gap: S,
    pub primaldual: S,
    /// `f − f_ref`
    pub subopt: S,
    /// `f − lower_bound`, never below the true suboptimality.
    pub subopt_certified: S,
    pub min_gap: S,
    /// `D_f(x_{t+1}, x_t)`
    pub bregman_step: S,
    pub degenerate: bool,
    /// Largest-magnitude coordinate of the LMO vertex and its value.
    pub vertex_peak: (usize, f64),
    /// `u·Σ|g_i|(|x_i| + |v_i|)`: how far rounding `x_{t+1}` can move `f`.
    pub update_rounding: f64,
    /// Worst-case rounding of the `gap` dot product, `n·update_rounding`.
    pub gap_rounding: f64,
    /// Rounding bound of `f` itself, from `Objective::value_rounding`.
    pub f_rounding: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    pub x: Vec<f64>,
    pub vertex: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct IterateTrace<S> {
    pub rule: StepRule,
    pub records: Vec<IterateRecord<S>>,
    pub snapshots: Vec<Snapshot>,
    pub final_x: Vec<S>,
    pub final_f: S,
    pub f_ref: S,
    pub reference_slack: S,
    pub unit_roundoff: f64,
    pub aborted: Option<String>,
}

/// A pointwise check that failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl<S: Scalar> IterateTrace<S> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn f_next(&self, i: usize) -> S {
        self.records.get(i + 1).map_or(self.final_f, |r| r.f)
    }

    /// `subopt_{t+1} = subopt_t − η_t·gap_t + D_f(x_{t+1}, x_t)`, checked to
    /// `rel_tol` relative to the largest term, with a floor for the rounding in
    /// `f` and in the update of `x`.
    pub fn fw_step_violations(&self, rel_tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = if self.aborted.is_some() {
            self.records.len().saturating_sub(1)
        } else {
            self.records.len()
        };
        for i in 0..n {
            let r = &self.records[i];
            let f1 = self.f_next(i);
            let s0 = r.subopt;
            let s1 = f1 - self.f_ref;
            let step = r.eta * r.gap;
            let rhs = s0 - step + r.bregman_step;
            let resid = (s1 - rhs).abs().to_f64();
            let scale = [s0, s1, step, r.bregman_step]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs().to_f64()));
            let f_round = self.records.get(i + 1).map_or(r.f_rounding, |n| n.f_rounding.max(r.f_rounding));
            let floor = 4.0 * (self.unit_roundoff * (r.f.abs().to_f64() + f1.abs().to_f64()) + r.update_rounding + f_round);
            if resid > rel_tol * scale + floor {
                out.push(Violation {
                    t: r.t,
                    lhs: s1.to_f64(),
                    rhs: rhs.to_f64(),
                });
            }
        }
        out
    }

    /// `subopt ≤ primaldual ≤ gap`, the left side relaxed by the reference
    /// slack and by the rounding of every dual bound `f_i − gap_i` so far.
    pub fn sandwich_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut dual_rounding = 0.0f64;
        for r in &self.records {
            dual_rounding = dual_rounding.max(r.gap_rounding + r.f_rounding);
            let tol = 4.0 * self.unit_roundoff * r.f.abs().to_f64().max(r.gap.abs().to_f64()) + dual_rounding + r.f_rounding;
            let slack = self.reference_slack.to_f64().max(0.0);
            if (r.subopt - r.primaldual).to_f64() > slack + tol {
                out.push(Violation {
                    t: r.t,
                    lhs: r.subopt.to_f64(),
                    rhs: r.primaldual.to_f64(),
                });
            }
            if (r.primaldual - r.gap).to_f64() > tol {
                out.push(Violation {
                    t: r.t,
                    lhs: r.primaldual.to_f64(),
                    rhs: r.gap.to_f64(),
                });
            }
        }
        out
    }
}

/// Runs exactly `iterations` FW steps from `x0`.
///
/// One LMO call per iteration feeds both the step and the gap. A non-finite
/// objective value stops the run early with `aborted` set.
pub fn fw_run<S: Scalar>(
    obj: &Objective,
    region: &FeasibleRegion,
    rule: StepRule,
    iterations: usize,
    x0: &[S],
    reference: &ReferenceSolution<S>,
    snap_every: usize,
) -> Result<IterateTrace<S>, FwError> {
    if iterations == 0 {
        return Err(FwError::ZeroHorizon);
    }
    if let StepRule::OpenLoop { ell: 0 } = rule {
        return Err(FwError::InvalidRule("open-loop ell must be >= 1".into()));
    }
    if x0.len() != region.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: region.dim(),
            got: x0.len(),
        }
        .into());
    }
    if !region.contains(&to_f64_vec(x0), 1e-9)? {
        return Err(FwError::InfeasibleStart);
    }
    let quad = obj.is_quadratic();
    let mut x = x0.to_vec();
    let mut records: Vec<IterateRecord<S>> = Vec::with_capacity(iterations);
    let mut snapshots = Vec::new();
    let mut pd = PrimalDualState::new();
    let mut min_gap: Option<S> = None;
    let mut aborted = None;
    // previous iterate data for the non-quadratic Bregman term
    let mut prev: Option<(S, Vec<S>, Vec<S>)> = None;

    let (mut f, mut g) = obj.value_and_grad(&x)?;
    for t in 0..iterations {
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            aborted = Some(format!("non-finite objective at t = {t}"));
            break;
        }
        if let Some((fp, gp, xp)) = prev.take() {
            let last = records.last_mut().expect("previous record");
            let mut lin = S::zero();
            for ((gi, xi), xpi) in gp.iter().zip(&x).zip(&xp) {
                lin += *gi * (*xi - *xpi);
            }
            last.bregman_step = f - fp - lin;
        }
        let lmo = region.lmo(&g)?;
        let mut gap = S::zero();
        for ((gi, xi), vi) in g.iter().zip(&x).zip(&lmo.vertex) {
            gap += *gi * (*xi - *vi);
        }
        let primaldual = pd.update(f, gap);
        let mg = match min_gap {
            Some(m) if m <= gap => m,
            _ => gap,
        };
        min_gap = Some(mg);
        let eta = step_size(&rule, t, obj, &x, &lmo.vertex, &g, gap);
        let eta = eta.max(S::zero()).min(S::one());

        if snap_every > 0 && t % snap_every == 0 {
            snapshots.push(Snapshot {
                t,
                x: to_f64_vec(&x),
                vertex: to_f64_vec(&lmo.vertex),
            });
        }
        let peak = lmo
            .vertex
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |(bi, bv), (i, v)| {
                let v = v.to_f64();
                if v.abs() > bv.abs() {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });

        let update_rounding = S::EPSILON
            * g.iter()
                .zip(&x)
                .zip(&lmo.vertex)
                .map(|((gi, xi), vi)| gi.to_f64().abs() * (xi.to_f64().abs() + vi.to_f64().abs()))
                .sum::<f64>();
        let x_prev = x.clone();
        for (xi, vi) in x.iter_mut().zip(&lmo.vertex) {
            *xi += eta * (*vi - *xi);
        }
        let bregman_step = if quad {
            let d: Vec<S> = x.iter().zip(&x_prev).map(|(a, b)| *a - *b).collect();
            match obj.kind() {
                ObjectiveKind::LeastSquares { a, .. } => linalg::norm2_sq(&a.matvec(&d)).mul_f64(0.5),
                _ => linalg::norm2_sq(&d).mul_f64(0.5),
            }
        } else {
            S::zero()
        };
        records.push(IterateRecord {
            t,
            eta,
            f,
            gap,
            primaldual,
            subopt: f - reference.f_ref,
            subopt_certified: f - reference.lower_bound,
            min_gap: mg,
            bregman_step,
            degenerate: lmo.degenerate,
            vertex_peak: peak,
            update_rounding,
            gap_rounding: update_rounding * g.len() as f64,
            f_rounding: obj.value_rounding(&to_f64_vec(&x_prev), S::EPSILON),
        });
        let (fn_, gn) = obj.value_and_grad(&x)?;
        if !quad {
            prev = Some((f, g, x_prev));
        }
        f = fn_;
        g = gn;
    }
    if aborted.is_none() {
        if let Some((fp, gp, xp)) = prev.take() {
            let last = records.last_mut().expect("record");
            let mut lin = S::zero();
            for ((gi, xi), xpi) in gp.iter().zip(&x).zip(&xp) {
                lin += *gi * (*xi - *xpi);
            }
            last.bregman_step = f - fp - lin;
        }
    }
    Ok(IterateTrace {
        rule,
        records,
        snapshots,
        final_x: x,
        final_f: f,
        f_ref: reference.f_ref,
        reference_slack: reference.slack(),
        unit_roundoff: S::EPSILON,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::reference_solution;

    #[test]
    fn open_loop_examples() {
        assert_eq!(open_loop_eta(4, 0), 1.0);
        assert_eq!(open_loop_eta(2, 2), 0.5);
        assert!(StepRule::open_loop(0).is_err());
        assert!(StepRule::short_step(0.0).is_err());
    }

    #[test]
    fn line_search_step_clipped() {
        let o = Objective::quadratic_distance(vec![2.0, 0.0]).unwrap();
        let x = [0.0, 0.0];
        let v = [1.0, 0.0];
        let (_, g) = o.value_and_grad(&x).unwrap();
        let gap = linalg::dot(&g, &[-1.0, 0.0]);
        let eta = step_size(&StepRule::ExactLineSearch, 0, &o, &x, &v, &g, gap);
        assert_eq!(eta, 1.0);
        // dense grid agrees that the constrained minimizer is the endpoint
        let best = (0..=1000)
            .map(|k| k as f64 / 1000.0)
            .min_by(|a, b| {
                let fa = o.value(&[*a, 0.0]).unwrap();
                let fb = o.value(&[*b, 0.0]).unwrap();
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        assert_eq!(best, 1.0);
    }

    #[test]
    fn first_step_lands_on_vertex() {
        let o = Objective::quadratic_distance(vec![2.0, 0.0]).unwrap();
        let c = FeasibleRegion::lp_ball(2.0, 1.0, 2).unwrap();
        let r = reference_solution::<f64>(&o, &c, 1).unwrap();
        let tr = fw_run(&o, &c, StepRule::OpenLoop { ell: 2 }, 1, &[0.0, 1.0], &r, 0).unwrap();
        // ∇f(x0) = (−2, 1), so v0 = (2, −1)/√5 and η0 = 1 puts x1 on it
        let v0 = c.lmo(&[-2.0, 1.0]).unwrap().vertex;
        for (a, b) in tr.final_x.iter().zip(&v0) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((v0[0] - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(tr.records[0].eta, 1.0);
    }

    #[test]
    fn rejects_infeasible_start() {
        let o = Objective::quadratic_distance(vec![2.0, 0.0]).unwrap();
        let c = FeasibleRegion::lp_ball(2.0, 1.0, 2).unwrap();
        let r = reference_solution::<f64>(&o, &c, 1).unwrap();
        let e = fw_run(&o, &c, StepRule::ExactLineSearch, 5, &[2.0, 0.0], &r, 0).unwrap_err();
        assert_eq!(e, FwError::InfeasibleStart);
    }

    #[test]
    fn line_search_is_monotone() {
        let o = Objective::quadratic_distance(vec![0.3, -0.9, 0.5]).unwrap();
        let c = FeasibleRegion::lp_ball(1.0, 1.0, 3).unwrap();
        let r = reference_solution::<f64>(&o, &c, 1).unwrap();
        let tr = fw_run(&o, &c, StepRule::ExactLineSearch, 200, &c.default_start(), &r, 0).unwrap();
        for w in tr.records.windows(2) {
            assert!(w[1].f <= w[0].f + 1e-15);
        }
    }
}
