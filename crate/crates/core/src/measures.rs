//! Primal-dual bookkeeping and log-log rate fitting.

use crate::fw::IterateTrace;
use crate::scalar::Scalar;
use thiserror::Error;

pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("window too small: {usable} usable points in [{lo}, {hi}]")]
    WindowTooSmall { lo: usize, hi: usize, usable: usize },
    #[error("invalid window [{0}, {1}]")]
    InvalidWindow(usize, usize),
}

/// Running `min_k (gap_k − f_k)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrimalDualState<S> {
    best_dual_offset: Option<S>,
}

impl<S: Scalar> PrimalDualState<S> {
    pub fn new() -> Self {
        PrimalDualState {
            best_dual_offset: None,
        }
    }

    pub fn best_dual_offset(&self) -> Option<S> {
        self.best_dual_offset
    }

    /// Folds in `(f_t, gap_t)` and returns `primaldual_t`.
    pub fn update(&mut self, f: S, gap: S) -> S {
        let cand = gap - f;
        let off = match self.best_dual_offset {
            Some(o) if o <= cand => o,
            _ => cand,
        };
        self.best_dual_offset = Some(off);
        // f + (gap − f) loses the low bits of gap when f ≫ gap
        if off == cand {
            gap
        } else {
            f + off
        }
    }
}

/// Functional form of [`PrimalDualState::update`].
pub fn primaldual_update<S: Scalar>(state: PrimalDualState<S>, f: S, gap: S) -> (PrimalDualState<S>, S) {
    let mut s = state;
    let pd = s.update(f, gap);
    (s, pd)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    Gap,
    MinGap,
    PrimalDual,
    Subopt,
    SuboptCertified,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Gap,
        Measure::MinGap,
        Measure::PrimalDual,
        Measure::Subopt,
        Measure::SuboptCertified,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Gap => "gap",
            Measure::MinGap => "min_gap",
            Measure::PrimalDual => "primaldual",
            Measure::Subopt => "subopt",
            Measure::SuboptCertified => "subopt_certified",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == s || (s == "subopt_ref" && *m == Measure::Subopt))
    }
}

impl<S: Scalar> IterateTrace<S> {
    /// `(t, value)` pairs of one measure.
    pub fn series(&self, m: Measure) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .map(|r| {
                let v = match m {
                    Measure::Gap => r.gap,
                    Measure::MinGap => r.min_gap,
                    Measure::PrimalDual => r.primaldual,
                    Measure::Subopt => r.subopt,
                    Measure::SuboptCertified => r.subopt_certified,
                };
                (r.t, v.to_f64())
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub used: usize,
    /// Points in the window dropped for being zero, negative or non-finite.
    pub dropped: usize,
}

/// OLS of `ln(value)` on `ln(t)` over `t ∈ [lo, hi]`, `t ≥ 1`.
pub fn fit_series(points: &[(usize, f64)], window: (usize, usize)) -> Result<RateFit, MeasureError> {
    let (lo, hi) = window;
    if lo >= hi {
        return Err(MeasureError::InvalidWindow(lo, hi));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for &(t, v) in points {
        if t < lo.max(1) || t > hi {
            continue;
        }
        if v > 0.0 && v.is_finite() {
            xs.push((t as f64).ln());
            ys.push(v.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(MeasureError::WindowTooSmall {
            lo,
            hi,
            usable: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(MeasureError::WindowTooSmall {
            lo,
            hi,
            usable: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        window,
        residual: (ss / n).sqrt(),
        used: xs.len(),
        dropped,
    })
}

pub fn fit_rate_slope<S: Scalar>(
    trace: &IterateTrace<S>,
    measure: Measure,
    window: (usize, usize),
) -> Result<RateFit, MeasureError> {
    fit_series(&trace.series(measure), window)
}

/// Last decade of `[1, t_max]`.
pub fn default_window(t_max: usize) -> (usize, usize) {
    ((t_max / 10).max(1), t_max)
}

/// Whether the default window lies entirely past the threshold `S`.
pub fn window_after_threshold(t_max: usize, threshold: usize) -> bool {
    threshold <= default_window(t_max).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primaldual_examples() {
        let (s, pd0) = primaldual_update(PrimalDualState::new(), 1.0, 0.5);
        assert_eq!(pd0, 0.5);
        let (_, pd1) = primaldual_update(s, 0.9, 0.6);
        assert!((pd1 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(usize, f64)> = (1..=10_000).map(|t| (t, (t as f64).powi(-2))).collect();
        let fit = fit_series(&pts, (10, 10_000)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9);
        let pts: Vec<(usize, f64)> = (1..=1000).map(|t| (t, 5.0 / t as f64)).collect();
        let fit = fit_series(&pts, (1, 1000)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let pts: Vec<(usize, f64)> = (1..=10_000)
            .map(|t| {
                let tf = t as f64;
                (t, tf.powi(-2) * (1.0 + 0.1 * tf.sin()))
            })
            .collect();
        let fit = fit_series(&pts, (100, 10_000)).unwrap();
        assert!(fit.slope > -2.05 && fit.slope < -1.95, "{}", fit.slope);
    }

    #[test]
    fn drops_nonpositive_and_rejects_small() {
        let mut pts: Vec<(usize, f64)> = (1..=50).map(|t| (t, 1.0 / t as f64)).collect();
        pts[20].1 = 0.0;
        let fit = fit_series(&pts, (1, 50)).unwrap();
        assert_eq!(fit.dropped, 1);
        assert!(matches!(
            fit_series(&pts, (1, 5)),
            Err(MeasureError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn window_defaults() {
        assert_eq!(default_window(100_000), (10_000, 100_000));
        assert!(window_after_threshold(100_000, 36));
        assert!(!window_after_threshold(100_000, 142_000));
    }
}
