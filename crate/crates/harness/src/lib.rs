//! Experiment harness: configuration, synthetic and file-backed instances,
//! runs over several step rules, and CSV/JSON/SVG artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod runner;
pub mod synth;

pub use certify::{certify_config, CertifyReport};
pub use config::{expand_sweep, ExperimentConfig, Preset};
pub use error::{HarnessError, Result};
pub use runner::{run_experiment, run_experiment_with, ArtifactSet, Report, RuleReport, RunOptions};
