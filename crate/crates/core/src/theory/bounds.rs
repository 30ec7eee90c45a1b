use super::constants::{ceil_tol, GrowthConstants};
use super::{ln_eta, TheoryError};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// `primaldual_t ≤ η_t M`
    SlowConv,
    Strong1,
    Strong1MinGap,
    StrongR,
    StrongRMinGap,
    Weak,
    /// The waiting time U, not a curve.
    WeakU,
    Gaps,
    RelaxedGaps,
    /// `‖x̄_t − x_t‖_C ≤ 2η_t²/η_Q²`, anchored at `S = Q`.
    DistanceLemma,
}

impl Theorem {
    pub fn name(&self) -> &'static str {
        match self {
            Theorem::SlowConv => "slow_conv",
            Theorem::Strong1 => "strong_1",
            Theorem::Strong1MinGap => "strong_1_min_gap",
            Theorem::StrongR => "strong_r",
            Theorem::StrongRMinGap => "strong_r_min_gap",
            Theorem::Weak => "weak",
            Theorem::WeakU => "weak_u",
            Theorem::Gaps => "gaps",
            Theorem::RelaxedGaps => "relaxed_gaps",
            Theorem::DistanceLemma => "distance_lemma",
        }
    }
}

/// Threshold iteration and the measured value there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub s: usize,
    pub value: f64,
}

/// `min(0.5, ℓ/4)`
pub fn default_epsilon(ell: u32) -> f64 {
    0.5f64.min(ell as f64 / 4.0)
}

fn ln_pos(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn need_eps(eps: f64, hi: f64) -> Result<(), TheoryError> {
    if eps > 0.0 && eps < hi {
        Ok(())
    } else {
        Err(TheoryError::InvalidParameter(format!("epsilon must lie in ]0, {hi}[, got {eps}")))
    }
}

fn need_r_below_one(c: &GrowthConstants) -> Result<f64, TheoryError> {
    if c.r < 1.0 {
        Ok(1.0 / (1.0 - c.r))
    } else {
        Err(TheoryError::InvalidParameter("this bound needs r < 1".into()))
    }
}

fn small_m(c: &GrowthConstants) -> Result<f64, TheoryError> {
    c.small_m.ok_or(TheoryError::KindMismatch(c.kind))
}

/// First `t` at which the bound is stated to hold.
pub fn valid_from(
    th: Theorem,
    c: &GrowthConstants,
    ell: u32,
    epsilon: f64,
    anchor: Anchor,
) -> Result<usize, TheoryError> {
    let l = ell as f64;
    let m = c.theorem_m();
    Ok(match th {
        Theorem::SlowConv => 1,
        Theorem::Strong1MinGap => {
            let v = (1.0 / l).exp() * l * m / (2.0 * (1.0 - epsilon)) - l + 1.0;
            anchor.s.max(ceil_tol(v).max(0.0) as usize)
        }
        Theorem::StrongRMinGap => {
            let k = (l - epsilon).min(need_r_below_one(c)?);
            let v = (1.0 / k).exp() * (anchor.s as f64 + l) - l;
            anchor.s.max(ceil_tol(v).max(0.0) as usize)
        }
        _ => anchor.s.max(1),
    })
}

/// Natural log of the bound at `t`. `-∞` means the bound is 0.
pub fn bound_curve_ln(
    th: Theorem,
    c: &GrowthConstants,
    ell: u32,
    epsilon: f64,
    anchor: Anchor,
    t: usize,
) -> Result<f64, TheoryError> {
    if ell == 0 {
        return Err(TheoryError::InvalidParameter("ell must be >= 1".into()));
    }
    let l = ell as f64;
    let big_m = c.theorem_m();
    let start = valid_from(th, c, ell, epsilon, anchor)?;
    if t < start && th != Theorem::WeakU {
        return Err(TheoryError::BelowThreshold { t, threshold: start });
    }
    let s = anchor.s.max(1);
    let ln_a = ln_pos(anchor.value);
    let basel = big_m * PI * PI * l * l / 12.0;
    // (η_{t−1}/η_{S−1})
    let ln_ratio = || ln_eta(ell, t - 1) - ln_eta(ell, s - 1);
    Ok(match th {
        Theorem::SlowConv => ln_eta(ell, t) + big_m.ln(),
        Theorem::Strong1 => ln_a + l * ln_ratio() + basel,
        Theorem::Strong1MinGap => {
            need_eps(epsilon, 1.0)?;
            ln_a + l * ln_ratio() + 2.0 + basel - epsilon.ln()
        }
        Theorem::StrongR => {
            need_eps(epsilon, l)?;
            let p = need_r_below_one(c)?;
            let k = (l - epsilon).min(p);
            let first = ln_a + (l - epsilon) * ln_ratio();
            let second = k * ln_eta(ell, t - 1) + p * (l * big_m / (2.0 * epsilon)).ln();
            epsilon * l / s as f64 + first.max(second)
        }
        Theorem::StrongRMinGap => {
            need_eps(epsilon, l)?;
            let p = need_r_below_one(c)?;
            let k = (l - epsilon).min(p);
            let first = ln_a - k * ln_eta(ell, s - 1);
            let second = p * (l * big_m / (2.0 * epsilon)).ln();
            2.0 + epsilon * l / s as f64 + k * ln_eta(ell, t - 1) + first.max(second)
        }
        Theorem::Weak => {
            need_eps(epsilon, l)?;
            let p = need_r_below_one(c)?;
            let k = (l - epsilon).min(p).min(2.0);
            let first = ln_a + (l - epsilon) * ln_ratio();
            let tail = log_add(p * (l * big_m / (2.0 * epsilon)).ln(), (big_m / 2.0).ln());
            let second = k * ln_eta(ell, t - 1) + tail;
            epsilon * l / s as f64 + first.max(second)
        }
        Theorem::WeakU => {
            let p = need_r_below_one(c)?;
            if l <= p {
                return Err(TheoryError::InvalidParameter("U needs ell > 1/(1-r)".into()));
            }
            if !(epsilon > 0.0 && epsilon <= l - p) {
                return Err(TheoryError::InvalidParameter(format!(
                    "epsilon must lie in ]0, {}], got {epsilon}",
                    l - p
                )));
            }
            let r_it = s;
            let inner = ln_a + (epsilon - l) * ln_eta(ell, r_it) + p * (2.0 * epsilon / (l * big_m)).ln()
                + epsilon * l / r_it as f64;
            let expo = inner / (l - epsilon - p);
            if expo > 700.0 {
                return Ok(f64::INFINITY);
            }
            return Ok(ceil_tol(l * expo.exp() - l).max(1.0).ln());
        }
        Theorem::Gaps | Theorem::RelaxedGaps => {
            let m = small_m(c)?;
            let p = need_r_below_one(c)?;
            let k = l.min(p).min(2.0);
            let first = ln_a + l * ln_ratio();
            let tail = log_add(p * (big_m / m).ln(), (big_m / 2.0).ln());
            first.max(k * ln_eta(ell, t - 1) + tail)
        }
        Theorem::DistanceLemma => 2f64.ln() + 2.0 * (ln_eta(ell, t) - ln_eta(ell, s)),
    })
}

/// Linear-domain bound, `+∞` when it overflows.
pub fn bound_curve(
    th: Theorem,
    c: &GrowthConstants,
    ell: u32,
    epsilon: f64,
    anchor: Anchor,
    t: usize,
) -> Result<f64, TheoryError> {
    let ln = bound_curve_ln(th, c, ell, epsilon, anchor, t)?;
    if th == Theorem::WeakU {
        return Ok(ln.exp().round());
    }
    Ok(if ln >= f64::MAX.ln() { f64::INFINITY } else { ln.exp() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominationReport {
    pub theorem: Theorem,
    pub anchor: Option<Anchor>,
    pub valid_from: usize,
    pub checked: usize,
    /// `(t, measured, bound)`
    pub violations: Vec<(usize, f64, f64)>,
    /// Largest `measured / bound` seen.
    pub max_ratio: f64,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// Nothing to check because S lies beyond the trace.
    pub fn vacuous(&self) -> bool {
        self.checked == 0
    }
}

/// Checks `measured_t ≤ bound(t)·(1 + rel_tol)` for every recorded `t` past
/// the threshold, anchored at the measured value at `s`.
pub fn check_domination(
    th: Theorem,
    c: &GrowthConstants,
    ell: u32,
    epsilon: f64,
    series: &[(usize, f64)],
    s: usize,
    rel_tol: f64,
) -> Result<DominationReport, TheoryError> {
    let anchor = series.iter().find(|(t, _)| *t == s).map(|(t, v)| Anchor { s: *t, value: *v });
    check_domination_anchored(th, c, ell, epsilon, series, s, anchor, rel_tol)
}

/// As [`check_domination`] with the anchor supplied, for the min-gap bounds
/// that are anchored on `primaldual_S` but bound `min_gap_t`.
#[allow(clippy::too_many_arguments)]
pub fn check_domination_anchored(
    th: Theorem,
    c: &GrowthConstants,
    ell: u32,
    epsilon: f64,
    series: &[(usize, f64)],
    s: usize,
    anchor: Option<Anchor>,
    rel_tol: f64,
) -> Result<DominationReport, TheoryError> {
    let mut report = DominationReport {
        theorem: th,
        anchor,
        valid_from: s,
        checked: 0,
        violations: Vec::new(),
        max_ratio: 0.0,
    };
    let Some(anchor) = anchor else {
        return Ok(report);
    };
    let start = valid_from(th, c, ell, epsilon, anchor)?;
    report.valid_from = start;
    let slack = rel_tol.ln_1p();
    for &(t, v) in series {
        if t < start {
            continue;
        }
        report.checked += 1;
        if v <= 0.0 {
            continue;
        }
        let lb = bound_curve_ln(th, c, ell, epsilon, anchor, t)?;
        let ratio = v.ln() - lb;
        if ratio.is_finite() {
            report.max_ratio = report.max_ratio.max(ratio.exp());
        }
        if ratio > slack {
            report.violations.push((t, v, lb.exp()));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::constants::GrowthKind;

    fn strong(m: f64, r: f64) -> GrowthConstants {
        GrowthConstants::manual(GrowthKind::Strong, m, None, r).unwrap()
    }

    #[test]
    fn slow_conv_example() {
        let v = bound_curve(Theorem::SlowConv, &strong(20.0, 0.0), 4, 0.5, Anchor { s: 1, value: 0.0 }, 4).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn distance_lemma_at_q() {
        let c = strong(1.0, 0.0);
        let v = bound_curve(Theorem::DistanceLemma, &c, 2, 0.5, Anchor { s: 10, value: 0.0 }, 10).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn strong1_anchor_consistency() {
        let c = strong(0.5, 1.0);
        let a = Anchor { s: 3, value: 0.7 };
        let v = bound_curve(Theorem::Strong1, &c, 4, 0.5, a, 3).unwrap();
        let expect = 0.7 * (0.5 * PI * PI * 16.0 / 12.0f64).exp();
        assert!(((v - expect) / expect).abs() < 1e-13);
        assert!(v >= 0.7);
    }

    #[test]
    fn overflow_is_infinite() {
        let c = strong(2000.0, 1.0);
        let v = bound_curve(Theorem::Strong1, &c, 4, 0.5, Anchor { s: 3996, value: 1e-3 }, 5000).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn below_threshold_errors() {
        let c = strong(20.0, 1.0);
        let e = bound_curve(Theorem::Strong1, &c, 4, 0.5, Anchor { s: 36, value: 1.0 }, 10).unwrap_err();
        assert_eq!(e, TheoryError::BelowThreshold { t: 10, threshold: 36 });
        assert!(bound_curve(Theorem::StrongR, &strong(3.0, 0.5), 4, 4.0, Anchor { s: 2, value: 1.0 }, 5).is_err());
    }

    #[test]
    fn gaps_bound_scales_with_objective() {
        let g = GrowthConstants::manual(GrowthKind::Gaps, 4.0, Some(0.1), 0.5).unwrap();
        let a = Anchor { s: 40, value: 0.3 };
        for gamma in [0.1, 10.0] {
            let gs = g.scaled(gamma);
            let sa = Anchor { s: 40, value: 0.3 * gamma };
            for t in [40usize, 100, 1000] {
                let b = bound_curve(Theorem::Gaps, &g, 4, 0.5, a, t).unwrap();
                let bs = bound_curve(Theorem::Gaps, &gs, 4, 0.5, sa, t).unwrap();
                assert!(((bs - gamma * b) / (gamma * b)).abs() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn domination_on_synthetic_series() {
        let c = strong(20.0, 0.0);
        let series: Vec<(usize, f64)> = (0..100).map(|t| (t, 10.0 / (t as f64 + 4.0))).collect();
        let rep = check_domination(Theorem::SlowConv, &c, 4, 0.5, &series, 1, 1e-9).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.checked, 99);
        let rep = check_domination(Theorem::SlowConv, &c, 4, 0.5, &series, 500, 1e-9).unwrap();
        assert!(rep.vacuous());
    }
}
