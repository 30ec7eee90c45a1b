//! Empirical growth constants against the closed-form example values.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::synth::synth_instance;
use fwlab_core::theory::{certify_growth_with, example_constants, GrowthKind, SampleSource};
use fwlab_core::{reference_solution, Execution};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedEstimate {
    pub seed: u64,
    pub estimate: f64,
    pub used: usize,
    pub skipped: usize,
    pub worst_source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub name: String,
    pub kind: String,
    pub r: f64,
    /// M for strong and weak growth, m for the gap kinds.
    pub closed_form: f64,
    pub samples: usize,
    pub eta_grid: usize,
    pub estimates: Vec<SeedEstimate>,
    /// Seeds whose estimate is on the wrong side of `closed_form`.
    pub violations: usize,
}

impl CertifyReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

pub const CERTIFY_TOL: f64 = 1e-9;

pub fn certify_config(cfg: &ExperimentConfig, samples: usize, seeds: &[u64], eta_grid: usize, exec: Execution) -> Result<CertifyReport> {
    cfg.validate()?;
    let ell = cfg.step_rules(1.0)?.iter().find_map(|r| r.ell()).unwrap_or(2);
    let ex = cfg
        .preset
        .example(ell)
        .ok_or_else(|| HarnessError::Validation(format!("preset {} has no closed-form constants", cfg.preset.tag())))?;
    let c = example_constants(ex).map_err(|e| HarnessError::Validation(e.to_string()))?;
    let inst = synth_instance(&cfg.preset, cfg.seed)?;
    let reference = reference_solution::<f64>(&inst.objective, &inst.region, cfg.reference_budget)
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;
    let maximize = matches!(c.kind, GrowthKind::Strong | GrowthKind::Weak);
    let closed_form = if maximize {
        c.big_m
    } else {
        c.small_m
            .ok_or_else(|| HarnessError::Numerical("gap constants without m".into()))?
    };
    let mut estimates = Vec::with_capacity(seeds.len());
    let mut violations = 0;
    for &seed in seeds {
        let res = certify_growth_with(c.kind, &inst.objective, &inst.region, &reference, c.r, samples, seed, eta_grid, exec)
            .map_err(|e| HarnessError::Numerical(e.to_string()))?;
        let bad = if maximize {
            res.estimate > closed_form * (1.0 + CERTIFY_TOL)
        } else {
            res.estimate < closed_form * (1.0 - CERTIFY_TOL)
        };
        violations += bad as usize;
        estimates.push(SeedEstimate {
            seed,
            estimate: res.estimate,
            used: res.used,
            skipped: res.skipped,
            worst_source: match res.worst_source {
                SampleSource::Interior => "interior",
                SampleSource::Boundary => "boundary",
                SampleSource::Trajectory => "trajectory",
            }
            .into(),
        });
    }
    Ok(CertifyReport {
        name: cfg.name(),
        kind: format!("{:?}", c.kind),
        r: c.r,
        closed_form,
        samples,
        eta_grid,
        estimates,
        violations,
    })
}
