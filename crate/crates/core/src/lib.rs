//! Frank-Wolfe with open-loop step sizes, affine-invariant optimality
//! measures, and the growth-property constants, thresholds and bound curves
//! that predict its accelerated rates.
//!
//! Every numerical kernel is generic over [`Scalar`], implemented for `f64`
//! and the double-double [`Dd`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dd;
pub mod fw;
pub mod geometry;
pub mod linalg;
pub mod measures;
pub mod objectives;
pub mod par;
pub mod scalar;
pub mod simplex;
pub mod theory;

pub use dd::Dd;
pub use fw::{fw_run, open_loop_eta, step_size, FwError, IterateRecord, IterateTrace, Snapshot, StepRule};
pub use geometry::{FeasibleRegion, GeometryError, LmoResult, RegionKind, SampleMode};
pub use linalg::Matrix;
pub use measures::{fit_rate_slope, fit_series, Measure, PrimalDualState, RateFit};
pub use objectives::{reference_solution, Objective, ObjectiveError, ObjectiveKind, Observation, ReferenceSolution};
pub use par::Execution;
pub use scalar::Scalar;
