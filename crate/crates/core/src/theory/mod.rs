//! Growth constants, thresholds, bound curves and their empirical checks.

mod bounds;
mod certify;
mod constants;
mod faces;
mod telescope;

pub use bounds::{
    bound_curve, bound_curve_ln, check_domination, check_domination_anchored, default_epsilon, valid_from, Anchor, DominationReport,
    Theorem,
};
pub use certify::{certify_growth, certify_growth_with, CertifyResult, SampleSource};
pub use constants::{
    active_set_q, ceil_tol, example_constants, slow_conv_constants, threshold_s, ExampleSetting, GrowthConstants,
    GrowthKind, Provenance,
};
pub use faces::{face_diagnostics, l1_face_distance, FaceDiagnostics, FaceRecord, FaceSpec};
pub use telescope::{telescope_check, telescope_grid, TelescopeGrid, TelescopeResult};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("below threshold: t = {t} < {threshold}")]
    BelowThreshold { t: usize, threshold: usize },
    #[error("gaps threshold undefined at r=0")]
    GapsThresholdUndefined,
    #[error("constants of kind {0:?} do not fit this operation")]
    KindMismatch(GrowthKind),
    #[error("all samples degenerate")]
    AllSamplesDegenerate,
    #[error("run with snap_every > 0")]
    NoSnapshots,
    #[error("{0}")]
    Numerics(String),
}

/// `ln η_t` for `η_t = ℓ/(t + ℓ)`.
#[inline]
pub(crate) fn ln_eta(ell: u32, t: usize) -> f64 {
    (ell as f64).ln() - (t as f64 + ell as f64).ln()
}
