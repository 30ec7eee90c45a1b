//! Builds an instance, runs every step rule and writes the artifacts.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{render_svg, thin_log, write_trace_csv, Guide, Panel, PlotLine};
use crate::synth::{synth_instance, Instance};
use fwlab_core::measures::{default_window, window_after_threshold};
use fwlab_core::scalar::from_f64_vec;
use fwlab_core::theory::{
    bound_curve, check_domination, check_domination_anchored, default_epsilon, example_constants, face_diagnostics,
    slow_conv_constants, threshold_s, Anchor, DominationReport, GrowthConstants, GrowthKind, Provenance, Theorem,
};
use fwlab_core::{fit_series, fw_run, reference_solution, Dd, Execution, IterateTrace, Measure, ReferenceSolution, Scalar, StepRule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Relative slack for bound domination; the bounds are proven, so this only absorbs rounding.
pub const DOMINATION_TOL: f64 = 1e-9;
/// Relative tolerance of the per-iteration FW identity.
pub const FW_STEP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub kind: String,
    pub big_m: f64,
    pub small_m: Option<f64>,
    pub r: f64,
    pub m0: Option<f64>,
    pub theorem_m: f64,
    /// Identification bound of the polytope construction.
    pub q: Option<usize>,
}

impl From<&GrowthConstants> for ConstantsSummary {
    fn from(c: &GrowthConstants) -> Self {
        ConstantsSummary {
            kind: format!("{:?}", c.kind),
            big_m: c.big_m,
            small_m: c.small_m,
            r: c.r,
            m0: c.m0,
            theorem_m: c.theorem_m(),
            q: match c.provenance {
                Provenance::ExamplePolytope { q, .. } => Some(q),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    pub residual: f64,
    pub used: usize,
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationSummary {
    pub theorem: String,
    pub measure: String,
    pub anchor_t: Option<usize>,
    pub anchor_value: Option<f64>,
    pub valid_from: usize,
    pub checked: usize,
    pub violations: usize,
    pub max_ratio: f64,
    /// `(t, measured, bound)`
    pub first_violation: Option<(usize, f64, f64)>,
}

impl DominationSummary {
    fn new(rep: &DominationReport, measure: Measure) -> Self {
        DominationSummary {
            theorem: rep.theorem.name().into(),
            measure: measure.name().into(),
            anchor_t: rep.anchor.map(|a| a.s),
            anchor_value: rep.anchor.map(|a| a.value),
            valid_from: rep.valid_from,
            checked: rep.checked,
            violations: rep.violations.len(),
            max_ratio: rep.max_ratio,
            first_violation: rep.violations.first().copied(),
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceSummary {
    pub q_empirical: Option<usize>,
    pub q_bound: Option<usize>,
    pub snapshots: usize,
    /// Snapshots at or after `q_empirical`.
    pub checked: usize,
    pub violations: usize,
    /// Largest `distance / (2η_t²/η_Q²)`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub rule: String,
    pub ell: Option<u32>,
    pub csv: String,
    pub iterations: usize,
    pub runtime_s: f64,
    pub aborted: Option<String>,
    pub constants: Option<ConstantsSummary>,
    pub threshold_s: Option<usize>,
    pub epsilon: Option<f64>,
    pub window_after_threshold: Option<bool>,
    pub fits: BTreeMap<String, FitSummary>,
    pub fit_errors: BTreeMap<String, String>,
    pub domination: Vec<DominationSummary>,
    pub fw_step_violations: usize,
    pub sandwich_violations: usize,
    pub face: Option<FaceSummary>,
    pub errors: Vec<String>,
}

impl RuleReport {
    pub fn slope(&self, m: Measure) -> Option<f64> {
        self.fits.get(m.name()).map(|f| f.slope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub method: String,
    pub f_ref: f64,
    pub lower_bound: f64,
    pub slack: f64,
    /// `‖x_ref − x*‖_∞` where the construction fixes `x*`.
    pub x_star_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub preset: String,
    pub description: String,
    pub precision: String,
    pub dim: usize,
    pub horizon: usize,
    pub seed: u64,
    pub smoothness: f64,
    pub smoothness_cnorm: f64,
    pub reference: ReferenceSummary,
    pub rules: Vec<RuleReport>,
    pub config: ExperimentConfig,
}

impl Report {
    pub fn rule(&self, label: &str) -> Option<&RuleReport> {
        self.rules.iter().find(|r| r.rule == label)
    }

    pub fn aborted(&self) -> bool {
        self.rules.iter().any(|r| r.aborted.is_some())
    }
}

#[derive(Clone, Debug)]
pub struct ArtifactSet {
    pub dir: PathBuf,
    pub report: Report,
    pub report_path: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub svg_path: Option<PathBuf>,
    pub bounds_paths: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub exec: Execution,
    /// Also write `bounds_<rule>.csv` with the theorem curves next to the measured series.
    pub emit_bounds: bool,
}

fn numerical(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Numerical(e.to_string())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ArtifactSet> {
    cfg.validate()?;
    let inst = synth_instance(&cfg.preset, cfg.seed)?;
    let dir = cfg.artifact_dir();
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    if cfg.use_dd() {
        run_typed::<Dd>(cfg, &inst, &dir, opts)
    } else {
        run_typed::<f64>(cfg, &inst, &dir, opts)
    }
}

struct RuleOutput {
    report: RuleReport,
    lines: [PlotLine; 3],
    bounds_path: Option<PathBuf>,
}

const PLOTTED: [Measure; 3] = [Measure::Gap, Measure::PrimalDual, Measure::Subopt];

fn run_typed<S: Scalar>(cfg: &ExperimentConfig, inst: &Instance, dir: &Path, opts: &RunOptions) -> Result<ArtifactSet> {
    let (obj, region) = (&inst.objective, &inst.region);
    let rules = cfg.step_rules(obj.declared_l())?;
    let reference = reference_solution::<S>(obj, region, cfg.reference_budget).map_err(numerical)?;
    let x_ref = fwlab_core::scalar::to_f64_vec(&reference.x_ref);
    let reference_summary = ReferenceSummary {
        method: reference.method.clone(),
        f_ref: reference.f_ref.to_f64(),
        lower_bound: reference.lower_bound.to_f64(),
        slack: reference.slack().to_f64(),
        x_star_error: inst
            .x_star
            .as_ref()
            .map(|xs| xs.iter().zip(&x_ref).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))),
    };

    let outputs = fwlab_core::par::map_slice(opts.exec, &rules, |rule| run_rule::<S>(cfg, inst, rule, &reference, dir, opts));
    let outputs: Vec<RuleOutput> = outputs.into_iter().collect::<Result<_>>()?;

    let mut svg_path = None;
    if cfg.emit_svg {
        let panels: Vec<Panel> = PLOTTED
            .iter()
            .enumerate()
            .map(|(k, m)| Panel {
                title: m.name().to_string(),
                lines: outputs.iter().map(|o| o.lines[k].clone()).collect(),
            })
            .collect();
        let first = &outputs[0].report;
        let mut guides = vec![
            Guide {
                label: "t^-1".into(),
                slope: -1.0,
            },
            Guide {
                label: "t^-2".into(),
                slope: -2.0,
            },
        ];
        let max_ell = outputs.iter().filter_map(|o| o.report.ell).max();
        if let Some(l) = max_ell.filter(|l| *l > 2) {
            guides.push(Guide {
                label: format!("t^-{l}"),
                slope: -(l as f64),
            });
        }
        if let Some(c) = first.constants.as_ref().filter(|c| c.r < 1.0 && c.r > 0.0) {
            let k = 1.0 / (1.0 - c.r);
            if max_ell.is_none_or(|l| (k - l as f64).abs() > 1e-9 && k != 2.0) {
                guides.push(Guide {
                    label: format!("t^-{k:.3}"),
                    slope: -k,
                });
            }
        }
        let svg = render_svg(&panels, &guides, first.threshold_s, cfg.horizon());
        let path = dir.join("plot.svg");
        std::fs::write(&path, svg).map_err(|e| HarnessError::io(&path, e))?;
        svg_path = Some(path);
    }

    let report = Report {
        name: cfg.name(),
        preset: cfg.preset.tag().into(),
        description: inst.description.clone(),
        precision: S::NAME.into(),
        dim: region.dim(),
        horizon: cfg.horizon(),
        seed: cfg.seed,
        smoothness: obj.declared_l(),
        smoothness_cnorm: obj.c_norm_smoothness(region),
        reference: reference_summary,
        rules: outputs.iter().map(|o| o.report.clone()).collect(),
        config: cfg.clone(),
    };
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?).map_err(|e| HarnessError::io(&report_path, e))?;
    Ok(ArtifactSet {
        dir: dir.to_path_buf(),
        csv_paths: outputs.iter().map(|o| dir.join(&o.report.csv)).collect(),
        bounds_paths: outputs.iter().filter_map(|o| o.bounds_path.clone()).collect(),
        report,
        report_path,
        svg_path,
    })
}

fn run_rule<S: Scalar>(
    cfg: &ExperimentConfig,
    inst: &Instance,
    rule: &StepRule,
    reference: &ReferenceSolution<S>,
    dir: &Path,
    opts: &RunOptions,
) -> Result<RuleOutput> {
    let (obj, region) = (&inst.objective, &inst.region);
    let horizon = cfg.horizon();
    let x0: Vec<S> = from_f64_vec(&region.default_start());
    let clock = Instant::now();
    let trace = fw_run(obj, region, *rule, horizon, &x0, reference, cfg.snap_every).map_err(numerical)?;
    let runtime_s = clock.elapsed().as_secs_f64();
    let csv = format!("trace_{}.csv", rule.label());
    write_trace_csv(&dir.join(&csv), &trace)?;

    let mut errors = Vec::new();
    let window = default_window(horizon);
    let mut fits = BTreeMap::new();
    let mut fit_errors = BTreeMap::new();
    for m in Measure::ALL {
        match fit_series(&trace.series(m), window) {
            Ok(f) => {
                fits.insert(
                    m.name().to_string(),
                    FitSummary {
                        slope: f.slope,
                        intercept: f.intercept,
                        window: f.window,
                        residual: f.residual,
                        used: f.used,
                        dropped: f.dropped,
                    },
                );
            }
            Err(e) => {
                fit_errors.insert(m.name().to_string(), e.to_string());
            }
        }
    }

    let ell = rule.ell();
    let epsilon = ell.map(default_epsilon);
    let constants = match ell.and_then(|l| cfg.preset.example(l)) {
        Some(ex) => Some(example_constants(ex).map_err(|e| HarnessError::Validation(e.to_string()))?),
        None => None,
    };
    let threshold = match (&constants, ell) {
        (Some(c), Some(l)) => match threshold_s(c, l) {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        },
        _ => None,
    };

    let mut domination = Vec::new();
    if let (Some(l), true) = (ell, obj.is_quadratic()) {
        if l >= 2 {
            let c = slow_conv_constants(obj.c_norm_smoothness(region)).map_err(numerical)?;
            let series: Vec<(usize, f64)> = trace.series(Measure::PrimalDual).into_iter().filter(|(t, _)| *t >= 1).collect();
            match check_domination(Theorem::SlowConv, &c, l, epsilon.unwrap_or(0.5), &series, 1, DOMINATION_TOL) {
                Ok(rep) => domination.push(DominationSummary::new(&rep, Measure::PrimalDual)),
                Err(e) => errors.push(format!("slow_conv: {e}")),
            }
        }
    }
    if let (Some(c), Some(l), Some(s), Some(eps)) = (&constants, ell, threshold, epsilon) {
        for b in &inst.bounds {
            if b.theorem == Theorem::RelaxedGaps && l < 2 {
                continue;
            }
            let series = trace.series(b.measure);
            let anchor = trace
                .series(b.anchor)
                .into_iter()
                .find(|(t, _)| *t == s)
                .map(|(t, v)| Anchor { s: t, value: v });
            match check_domination_anchored(b.theorem, c, l, eps, &series, s, anchor, DOMINATION_TOL) {
                Ok(rep) => domination.push(DominationSummary::new(&rep, b.measure)),
                Err(e) => errors.push(format!("{}: {e}", b.theorem.name())),
            }
        }
    }

    let face = match (&inst.face, ell) {
        (Some(face), Some(l)) if l >= 2 && !trace.snapshots.is_empty() => Some(face_summary(&trace, inst, face, l, constants.as_ref())?),
        _ => None,
    };

    let bounds_path = if opts.emit_bounds {
        let path = dir.join(format!("bounds_{}.csv", rule.label()));
        write_bounds_csv(&path, &trace, &domination, ell, constants.as_ref(), obj.c_norm_smoothness(region))?;
        Some(path)
    } else {
        None
    };

    let lines = PLOTTED.map(|m| PlotLine {
        label: rule.label(),
        points: thin_log(&trace.series(m), 40),
    });
    Ok(RuleOutput {
        report: RuleReport {
            rule: rule.label(),
            ell,
            csv,
            iterations: trace.len(),
            runtime_s,
            aborted: trace.aborted.clone(),
            constants: constants.as_ref().map(ConstantsSummary::from),
            threshold_s: threshold,
            epsilon,
            window_after_threshold: threshold.map(|s| window_after_threshold(horizon, s)),
            fits,
            fit_errors,
            domination,
            fw_step_violations: trace.fw_step_violations(FW_STEP_TOL).len(),
            sandwich_violations: trace.sandwich_violations().len(),
            face,
            errors,
        },
        lines,
        bounds_path,
    })
}

/// Identification time and the distance lemma `‖x̄_t − x_t‖_C ≤ 2η_t²/η_Q²` for `t ≥ Q_emp`.
fn face_summary<S: Scalar>(
    trace: &IterateTrace<S>,
    inst: &Instance,
    face: &fwlab_core::theory::FaceSpec,
    ell: u32,
    constants: Option<&GrowthConstants>,
) -> Result<FaceSummary> {
    let diag = face_diagnostics(trace, &inst.region, face).map_err(numerical)?;
    let dummy = GrowthConstants::manual(GrowthKind::Strong, 1.0, None, 0.0).map_err(numerical)?;
    let c = constants.unwrap_or(&dummy);
    let mut checked = 0;
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    if let Some(q) = diag.q_empirical {
        for rec in diag.records.iter().filter(|r| r.t >= q.max(1)) {
            let b = bound_curve(Theorem::DistanceLemma, c, ell, 0.5, Anchor { s: q, value: 0.0 }, rec.t).map_err(numerical)?;
            checked += 1;
            max_ratio = max_ratio.max(rec.distance_cnorm / b);
            if rec.distance_cnorm > b * (1.0 + DOMINATION_TOL) {
                violations += 1;
            }
        }
    }
    Ok(FaceSummary {
        q_empirical: diag.q_empirical,
        q_bound: constants.and_then(|c| match c.provenance {
            Provenance::ExamplePolytope { q, .. } => Some(q),
            _ => None,
        }),
        snapshots: diag.records.len(),
        checked,
        violations,
        max_ratio,
    })
}

/// Long format: `theorem, measure, t, measured, bound` on a log-spaced grid past each threshold.
fn write_bounds_csv<S: Scalar>(
    path: &Path,
    trace: &IterateTrace<S>,
    domination: &[DominationSummary],
    ell: Option<u32>,
    constants: Option<&GrowthConstants>,
    l_cnorm: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theorem", "measure", "t", "measured", "bound"])?;
    if let Some(l) = ell {
        let eps = default_epsilon(l);
        for d in domination {
            let th = match d.theorem.as_str() {
                "slow_conv" => Theorem::SlowConv,
                "strong_1" => Theorem::Strong1,
                "strong_1_min_gap" => Theorem::Strong1MinGap,
                "strong_r" => Theorem::StrongR,
                "strong_r_min_gap" => Theorem::StrongRMinGap,
                "weak" => Theorem::Weak,
                "gaps" => Theorem::Gaps,
                "relaxed_gaps" => Theorem::RelaxedGaps,
                _ => continue,
            };
            let c = if th == Theorem::SlowConv {
                slow_conv_constants(l_cnorm).map_err(numerical)?
            } else {
                match constants {
                    Some(c) => c.clone(),
                    None => continue,
                }
            };
            let (Some(s), Some(v)) = (d.anchor_t, d.anchor_value) else { continue };
            let m = Measure::parse(&d.measure).unwrap_or(Measure::Subopt);
            for (t, measured) in thin_log(&trace.series(m), 40) {
                if t < d.valid_from {
                    continue;
                }
                let b = bound_curve(th, &c, l, eps, Anchor { s, value: v }, t).map_err(numerical)?;
                w.write_record([
                    d.theorem.clone(),
                    d.measure.clone(),
                    t.to_string(),
                    crate::output::fmt17(measured),
                    crate::output::fmt17(b),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}
