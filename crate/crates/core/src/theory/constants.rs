use super::TheoryError;
use crate::fw::open_loop_eta;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GrowthKind {
    Strong,
    Weak,
    Gaps,
    RelaxedGaps,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    ExampleStrong { p: f64, lambda: f64 },
    ExampleWeak { p: f64 },
    ExampleGaps { rho: f64, n: usize },
    ExamplePolytope {
        rho: f64,
        kappa: f64,
        theta: f64,
        l: f64,
        mu: f64,
        b: f64,
        q: usize,
    },
    Manual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthConstants {
    pub kind: GrowthKind,
    /// M
    pub big_m: f64,
    /// m, gaps kinds only
    pub small_m: Option<f64>,
    pub r: f64,
    /// Constant of the accompanying strong (M₀, 0)-growth, where known.
    pub m0: Option<f64>,
    pub provenance: Provenance,
}

impl GrowthConstants {
    pub fn manual(kind: GrowthKind, big_m: f64, small_m: Option<f64>, r: f64) -> Result<Self, TheoryError> {
        let c = GrowthConstants {
            kind,
            big_m,
            small_m,
            r,
            m0: None,
            provenance: Provenance::Manual,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), TheoryError> {
        if !(self.big_m > 0.0) || !self.big_m.is_finite() {
            return Err(TheoryError::InvalidParameter(format!("M must be > 0, got {}", self.big_m)));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(TheoryError::InvalidParameter(format!("r must lie in [0, 1], got {}", self.r)));
        }
        if matches!(self.kind, GrowthKind::Gaps | GrowthKind::RelaxedGaps) {
            match self.small_m {
                Some(m) if m > 0.0 && m.is_finite() => {}
                _ => return Err(TheoryError::InvalidParameter("gaps kinds need m > 0".into())),
            }
        }
        Ok(())
    }

    /// The single M used by the theorems: `max(M, M₀)`, since they need the
    /// strong (M, 0) and the stated growth with one constant.
    pub fn theorem_m(&self) -> f64 {
        self.m0.map_or(self.big_m, |m0| self.big_m.max(m0))
    }

    /// `γ f` in place of `f`: M and M₀ scale by γ, m by γ^r.
    pub fn scaled(&self, gamma: f64) -> Self {
        let mut c = self.clone();
        c.big_m *= gamma;
        c.m0 = c.m0.map(|v| v * gamma);
        c.small_m = c.small_m.map(|m| m * gamma.powf(self.r));
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExampleSetting {
    Strong { p: f64, lambda: f64, n: usize },
    Weak { p: f64, n: usize },
    Gaps { rho: f64, n: usize },
    Polytope { rho: f64, kappa: f64, n: usize, ell: u32 },
}

fn check(cond: bool, msg: &str) -> Result<(), TheoryError> {
    if cond {
        Ok(())
    } else {
        Err(TheoryError::InvalidParameter(msg.to_string()))
    }
}

/// `⌈x⌉` that forgives a few ulps above an integer.
pub fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

/// Identification bound `⌈4Lℓ(4Lμ/κ)^{1/θ}⌉`.
pub fn active_set_q(l: f64, ell: u32, mu: f64, kappa: f64, theta: f64) -> usize {
    let v = 4.0 * l * ell as f64 * (4.0 * l * mu / kappa).powf(1.0 / theta);
    let c = ceil_tol(v);
    if c >= usize::MAX as f64 {
        usize::MAX
    } else {
        c as usize
    }
}

/// Strong (4L, 0) constants for the slow-rate theorem.
pub fn slow_conv_constants(l_cnorm: f64) -> Result<GrowthConstants, TheoryError> {
    GrowthConstants::manual(GrowthKind::Strong, 4.0 * l_cnorm, None, 0.0)
}

pub fn example_constants(setting: ExampleSetting) -> Result<GrowthConstants, TheoryError> {
    match setting {
        ExampleSetting::Strong { p, lambda, n } => {
            check(p > 1.0 && p.is_finite(), "p must exceed 1")?;
            check(lambda > 0.0, "lambda must be > 0")?;
            check(n >= 1, "n must be >= 1")?;
            let (big_m, r) = if p <= 2.0 {
                (4.0 / ((p - 1.0) * lambda), 1.0)
            } else {
                let nf = (n as f64).powf(0.5 - 1.0 / p);
                (nf * (p * 2f64.powf(p - 1.0) / lambda).powf(2.0 / p), 2.0 / p)
            };
            Ok(GrowthConstants {
                kind: GrowthKind::Strong,
                big_m,
                small_m: None,
                r,
                m0: None,
                provenance: Provenance::ExampleStrong { p, lambda },
            })
        }
        ExampleSetting::Weak { p, n } => {
            check(p > 1.0 && p.is_finite(), "p must exceed 1")?;
            check(n >= 1, "n must be >= 1")?;
            let nf = (n as f64).powf(0.5 - 1.0 / p);
            let (big_m, r, m0) = if p <= 2.0 {
                (4.0 * 2f64.sqrt() * nf / (p - 1.0), 0.5, 4.0)
            } else {
                (
                    nf * (2f64.sqrt() * p * 2f64.powf(p - 1.0)).powf(2.0 / p),
                    1.0 / p,
                    4.0 * nf,
                )
            };
            Ok(GrowthConstants {
                kind: GrowthKind::Weak,
                big_m,
                small_m: None,
                r,
                m0: Some(m0),
                provenance: Provenance::ExampleWeak { p },
            })
        }
        ExampleSetting::Gaps { rho, n } => {
            check(rho > 0.0 && rho < 1.0, "rho must lie in ]0, 1[")?;
            check(n >= 1, "n must be >= 1")?;
            Ok(GrowthConstants {
                kind: GrowthKind::Gaps,
                big_m: 4.0,
                small_m: Some(rho / (2.0 * n as f64).sqrt()),
                r: 0.5,
                m0: Some(4.0),
                provenance: Provenance::ExampleGaps { rho, n },
            })
        }
        ExampleSetting::Polytope { rho, kappa, n, ell } => {
            check(rho > 0.0 && rho < 1.0, "rho must lie in ]0, 1[")?;
            check(kappa > 0.0 && kappa.is_finite(), "kappa must be > 0")?;
            check(n >= 2, "n must be >= 2")?;
            check(ell >= 1, "ell must be >= 1")?;
            let theta = 0.5;
            let l = 1.0;
            let mu = (2.0 * n as f64).sqrt();
            let b = 2.0 - rho;
            let q = active_set_q(l, ell, mu, kappa, theta);
            let m = rho / (2f64.powf(2.0 - theta) * mu);
            let eta_q = open_loop_eta(ell, q);
            let big_m = (m / eta_q * (4.0 * b).powf(1.0 - theta))
                .max(2.0 * (2.0 * l + b) / eta_q)
                .max(4.0 * l);
            Ok(GrowthConstants {
                kind: GrowthKind::RelaxedGaps,
                big_m,
                small_m: Some(m),
                r: theta,
                m0: None,
                provenance: Provenance::ExamplePolytope {
                    rho,
                    kappa,
                    theta,
                    l,
                    mu,
                    b,
                    q,
                },
            })
        }
    }
}

fn to_threshold(v: f64) -> usize {
    let c = ceil_tol(v).max(1.0);
    if c >= usize::MAX as f64 {
        usize::MAX
    } else {
        c as usize
    }
}

/// Iteration after which the matching theorem's bound applies.
pub fn threshold_s(c: &GrowthConstants, ell: u32) -> Result<usize, TheoryError> {
    if ell == 0 {
        return Err(TheoryError::InvalidParameter("ell must be >= 1".into()));
    }
    let l = ell as f64;
    let big_m = c.theorem_m();
    match c.kind {
        GrowthKind::Strong | GrowthKind::Weak => Ok(to_threshold(l * big_m / 2.0 - l)),
        GrowthKind::Gaps | GrowthKind::RelaxedGaps => {
            if c.r == 0.0 {
                return Err(TheoryError::GapsThresholdUndefined);
            }
            let m = c.small_m.ok_or(TheoryError::KindMismatch(c.kind))?;
            // 2^{1/r} ℓ M / m^{1/r}, in logs to survive tiny m
            let ln = (1.0 / c.r) * 2f64.ln() + l.ln() + big_m.ln() - m.ln() / c.r;
            let s = to_threshold(ln.exp() - l);
            match (&c.kind, &c.provenance) {
                (GrowthKind::RelaxedGaps, Provenance::ExamplePolytope { q, .. }) => Ok(s.max(*q)),
                _ => Ok(s),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_example_p2() {
        let c = example_constants(ExampleSetting::Strong { p: 2.0, lambda: 0.2, n: 100 }).unwrap();
        assert!((c.big_m - 20.0).abs() < 1e-12);
        assert_eq!(c.r, 1.0);
        assert_eq!(threshold_s(&c, 4).unwrap(), 36);
    }

    #[test]
    fn gaps_example() {
        let c = example_constants(ExampleSetting::Gaps { rho: 0.3, n: 100 }).unwrap();
        assert!((c.small_m.unwrap() - 0.021_213_203_435_596_43).abs() < 1e-15);
        assert_eq!(c.r, 0.5);
    }

    #[test]
    fn out_of_range() {
        assert!(example_constants(ExampleSetting::Strong { p: 1.0, lambda: 0.2, n: 10 }).is_err());
        assert!(example_constants(ExampleSetting::Gaps { rho: 1.0, n: 10 }).is_err());
        assert!(example_constants(ExampleSetting::Polytope { rho: 0.1, kappa: 0.0, n: 10, ell: 4 }).is_err());
    }

    #[test]
    fn threshold_examples() {
        let c = GrowthConstants::manual(GrowthKind::Strong, 0.1, None, 1.0).unwrap();
        assert_eq!(threshold_s(&c, 2).unwrap(), 1);
        let g = GrowthConstants::manual(GrowthKind::Gaps, 4.0, Some(1.0), 0.5).unwrap();
        assert_eq!(threshold_s(&g, 2).unwrap(), 30);
        let z = GrowthConstants::manual(GrowthKind::Gaps, 4.0, Some(1.0), 0.0).unwrap();
        assert_eq!(threshold_s(&z, 2).unwrap_err(), TheoryError::GapsThresholdUndefined);
    }

    #[test]
    fn polytope_q_at_large_kappa() {
        let c = example_constants(ExampleSetting::Polytope { rho: 0.1, kappa: 100.0, n: 100, ell: 4 }).unwrap();
        let Provenance::ExamplePolytope { q, b, .. } = c.provenance else {
            panic!()
        };
        // 16·(4√200/100)² = 16·0.32 = 5.12
        assert_eq!(q, 6);
        assert!((b - 1.9).abs() < 1e-15);
        assert!(threshold_s(&c, 4).unwrap() >= q);
    }

    #[test]
    fn gaps_threshold_is_scale_invariant() {
        let g = example_constants(ExampleSetting::Gaps { rho: 0.5, n: 20 }).unwrap();
        let s = threshold_s(&g, 4).unwrap();
        for gamma in [0.1, 10.0] {
            assert_eq!(threshold_s(&g.scaled(gamma), 4).unwrap(), s);
        }
        // L → γL, μ → γ^{−θ}μ, κ → γκ
        let raw = |l: f64, mu: f64, kappa: f64| 4.0 * l * 4.0 * (4.0 * l * mu / kappa).powf(2.0);
        let base = raw(1.0, 20.0, 0.5);
        for gamma in [0.1f64, 10.0] {
            let v = raw(gamma, 20.0 / gamma.sqrt(), 0.5 * gamma);
            assert!(((v - base) / base).abs() < 1e-12);
            assert_eq!(active_set_q(gamma, 4, 20.0 / gamma.sqrt(), 0.5 * gamma, 0.5), active_set_q(1.0, 4, 20.0, 0.5, 0.5));
        }
    }
}
