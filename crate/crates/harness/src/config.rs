//! Experiment configuration.
//!
//! A config is one flat TOML document. `preset` selects the experiment and its
//! parameters sit next to the common keys:
//!
//! ```toml
//! preset = "strong1"
//! p = 2.0
//! lambda = 0.2
//! T = 100000
//! seed = 7
//!
//! [sweep]
//! p = [1.01, 1.1, 2.0]
//! ```
//!
//! The optional `[sweep]` table lists values for any top-level key; `sweep`
//! runs the Cartesian product, `run` ignores it.

use crate::error::{HarnessError, Result};
use fwlab_core::theory::{example_constants, ExampleSetting};
use fwlab_core::StepRule;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const OUTPUT_ROOT_ENV: &str = "FWLAB_OUTPUT_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F64,
    /// Double-double.
    Dd,
    /// Double-double for the stylized presets, `f64` for data presets.
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    DenseCsv,
    Libsvm,
    TripletCsv,
}

/// Where a data preset gets its numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    /// File path; absent means the seeded synthetic stand-in.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub schema: Option<Schema>,
    #[serde(default)]
    pub target_column: Option<String>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource {
            data: None,
            schema: None,
            target_column: None,
            normalize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    Lp { p: f64, radius: f64, n: usize },
    Polytope { vertices: Vec<Vec<f64>> },
    Nuclear { radius: f64, rows: usize, cols: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `½‖x − y‖²`
    Quadratic { y: Vec<f64> },
    /// `½‖Ax − b‖²`, `a` given by rows.
    LeastSquares { a: Vec<Vec<f64>>, b: Vec<f64> },
}

fn yes() -> bool {
    true
}
fn n100() -> usize {
    100
}
fn lambda02() -> f64 {
    0.2
}
fn ell4() -> u32 {
    4
}
fn one() -> f64 {
    1.0
}
fn ablation_ells() -> Vec<u32> {
    vec![1, 2, 5, 10]
}
fn linesearch_ells() -> Vec<u32> {
    vec![1, 2, 4]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    /// ℓp-ball, `p ∈ ]1, 2]`, `‖y‖_q = 1 + λ`.
    Strong1 {
        p: f64,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "lambda02")]
        lambda: f64,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// ℓp-ball, `p > 2`, `‖y‖_q = n^{1/q−1/p} + λ`.
    StrongR {
        p: f64,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "lambda02")]
        lambda: f64,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// ℓp-ball with `‖y‖_p = 1`.
    Weak {
        p: f64,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// ℓ1-ball with `‖y‖₁ = 1 − ρ`.
    Gaps {
        rho: f64,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// ℓ1-ball with `y = κv + z`.
    Polytope {
        rho: f64,
        kappa: f64,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// ℓ2-ball strong setting for several ℓ.
    Ablation {
        #[serde(default = "ablation_ells")]
        ell_list: Vec<u32>,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "lambda02")]
        lambda: f64,
    },
    /// Polytope instance under open-loop ℓ ∈ `ell_list` and exact line search.
    Linesearch {
        rho: f64,
        kappa: f64,
        #[serde(default = "n100")]
        n: usize,
        #[serde(default = "linesearch_ells")]
        ell_list: Vec<u32>,
    },
    /// `½‖Ax − y‖²` over `‖x‖_p ≤ beta_factor·‖x_unc‖_p`.
    Regression {
        #[serde(flatten)]
        source: DataSource,
        p: f64,
        #[serde(default = "one")]
        beta_factor: f64,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// Logistic loss over the ℓ1-ball.
    Logistic {
        #[serde(flatten)]
        source: DataSource,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "ell4")]
        ell: u32,
    },
    /// Huber matrix completion over a nuclear-norm ball.
    Completion {
        #[serde(flatten)]
        source: DataSource,
        #[serde(default = "one")]
        rho_huber: f64,
        beta: f64,
        #[serde(default = "ell4")]
        ell: u32,
    },
    Custom {
        region: RegionSpec,
        objective: ObjectiveSpec,
    },
}

impl Preset {
    pub fn tag(&self) -> &'static str {
        match self {
            Preset::Strong1 { .. } => "strong1",
            Preset::StrongR { .. } => "strong_r",
            Preset::Weak { .. } => "weak",
            Preset::Gaps { .. } => "gaps",
            Preset::Polytope { .. } => "polytope",
            Preset::Ablation { .. } => "ablation",
            Preset::Linesearch { .. } => "linesearch",
            Preset::Regression { .. } => "regression",
            Preset::Logistic { .. } => "logistic",
            Preset::Completion { .. } => "completion",
            Preset::Custom { .. } => "custom",
        }
    }

    /// Stylized presets reproduce a closed-form example.
    pub fn is_stylized(&self) -> bool {
        !matches!(
            self,
            Preset::Regression { .. } | Preset::Logistic { .. } | Preset::Completion { .. } | Preset::Custom { .. }
        )
    }

    pub fn default_horizon(&self) -> usize {
        if self.is_stylized() {
            100_000
        } else {
            10_000
        }
    }

    pub fn default_rules(&self) -> Vec<StepRule> {
        let ol = |ell: u32| StepRule::OpenLoop { ell };
        match self {
            Preset::Strong1 { ell, .. }
            | Preset::StrongR { ell, .. }
            | Preset::Weak { ell, .. }
            | Preset::Gaps { ell, .. }
            | Preset::Polytope { ell, .. }
            | Preset::Regression { ell, .. }
            | Preset::Logistic { ell, .. }
            | Preset::Completion { ell, .. } => vec![ol(*ell)],
            Preset::Ablation { ell_list, .. } => ell_list.iter().map(|l| ol(*l)).collect(),
            Preset::Linesearch { ell_list, .. } => {
                let mut v: Vec<StepRule> = ell_list.iter().map(|l| ol(*l)).collect();
                v.push(StepRule::ExactLineSearch);
                v
            }
            Preset::Custom { .. } => vec![ol(2)],
        }
    }

    /// The closed-form example behind a stylized preset, for one ℓ.
    pub fn example(&self, ell: u32) -> Option<ExampleSetting> {
        match *self {
            Preset::Strong1 { p, n, lambda, .. } | Preset::StrongR { p, n, lambda, .. } => {
                Some(ExampleSetting::Strong { p, lambda, n })
            }
            Preset::Ablation { n, lambda, .. } => Some(ExampleSetting::Strong { p: 2.0, lambda, n }),
            Preset::Weak { p, n, .. } => Some(ExampleSetting::Weak { p, n }),
            Preset::Gaps { rho, n, .. } => Some(ExampleSetting::Gaps { rho, n }),
            Preset::Polytope { rho, kappa, n, .. } | Preset::Linesearch { rho, kappa, n, .. } => {
                Some(ExampleSetting::Polytope { rho, kappa, n, ell })
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Validation(m));
        let ell_ok = |ell: u32| -> Result<()> {
            if ell == 0 {
                return bad("ell must be >= 1".into());
            }
            Ok(())
        };
        match self {
            Preset::Strong1 { p, ell, .. } => {
                if !(*p > 1.0 && *p <= 2.0) {
                    return bad(format!("strong1 needs p in ]1, 2], got {p}"));
                }
                ell_ok(*ell)?;
            }
            Preset::StrongR { p, ell, .. } => {
                if !(*p > 2.0 && p.is_finite()) {
                    return bad(format!("strong_r needs p > 2, got {p}"));
                }
                ell_ok(*ell)?;
            }
            Preset::Weak { ell, .. } | Preset::Gaps { ell, .. } => ell_ok(*ell)?,
            Preset::Polytope { n, ell, .. } => {
                if *n < 6 {
                    return bad(format!("polytope needs n >= 6, got {n}"));
                }
                ell_ok(*ell)?;
            }
            Preset::Ablation { ell_list, .. } | Preset::Linesearch { ell_list, .. } => {
                if ell_list.is_empty() {
                    return bad("ell_list must not be empty".into());
                }
                for l in ell_list {
                    ell_ok(*l)?;
                }
                if let Preset::Linesearch { n, .. } = self {
                    if *n < 6 {
                        return bad(format!("linesearch needs n >= 6, got {n}"));
                    }
                }
            }
            Preset::Regression { p, beta_factor, ell, source } => {
                if !(*p >= 1.0) {
                    return bad(format!("regression needs p >= 1, got {p}"));
                }
                if !(*beta_factor > 0.0) {
                    return bad(format!("beta_factor must be > 0, got {beta_factor}"));
                }
                ell_ok(*ell)?;
                source.validate(true)?;
            }
            Preset::Logistic { radius, ell, source } => {
                if !(*radius > 0.0) {
                    return bad(format!("radius must be > 0, got {radius}"));
                }
                ell_ok(*ell)?;
                source.validate(true)?;
            }
            Preset::Completion {
                rho_huber,
                beta,
                ell,
                source,
            } => {
                if !(*rho_huber > 0.0) || !(*beta > 0.0) {
                    return bad("completion needs rho_huber > 0 and beta > 0".into());
                }
                ell_ok(*ell)?;
                source.validate(false)?;
            }
            Preset::Custom { .. } => {}
        }
        for rule in self.default_rules() {
            if let Some(ell) = rule.ell() {
                if let Some(ex) = self.example(ell) {
                    example_constants(ex).map_err(|e| HarnessError::Validation(e.to_string()))?;
                }
            }
        }
        Ok(())
    }
}

impl DataSource {
    fn validate(&self, dense: bool) -> Result<()> {
        if self.data.is_none() {
            return Ok(());
        }
        match (self.schema, dense) {
            (None, _) => Err(HarnessError::Validation("data needs a schema".into())),
            (Some(Schema::TripletCsv), true) => Err(HarnessError::Validation(
                "this preset needs dense_csv or libsvm data".into(),
            )),
            (Some(Schema::DenseCsv | Schema::Libsvm), false) => {
                Err(HarnessError::Validation("completion needs triplet_csv data".into()))
            }
            (Some(Schema::DenseCsv), true) if self.target_column.is_none() => {
                Err(HarnessError::Validation("dense_csv needs target_column".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Artifact directory name; defaults to the preset tag.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub preset: Preset,
    #[serde(rename = "T", default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub reference_budget: usize,
    #[serde(default)]
    pub snap_every: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub emit_svg: bool,
    #[serde(default)]
    pub precision: Precision,
    /// Overrides the preset's step rules: `open-loop-<ℓ>`, `line-search`, `short-step`.
    #[serde(default)]
    pub rules: Option<Vec<String>>,
}

fn default_seed() -> u64 {
    1
}
fn default_budget() -> usize {
    2000
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

pub fn parse_rule(s: &str, smoothness: f64) -> Result<StepRule> {
    let err = |e: fwlab_core::FwError| HarnessError::Validation(e.to_string());
    match s {
        "line-search" => Ok(StepRule::ExactLineSearch),
        "short-step" => StepRule::short_step(smoothness).map_err(err),
        _ => match s.strip_prefix("open-loop-").map(str::parse::<u32>) {
            Some(Ok(ell)) => StepRule::open_loop(ell).map_err(err),
            _ => Err(HarnessError::Validation(format!("unknown step rule {s:?}"))),
        },
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let mut table: toml::Table = s.parse().map_err(|e: toml::de::Error| HarnessError::Validation(e.to_string()))?;
        table.remove("sweep");
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&s)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon() < 10 {
            return Err(HarnessError::Validation(format!("T must be >= 10, got {}", self.horizon())));
        }
        if self.reference_budget == 0 {
            return Err(HarnessError::Validation("reference_budget must be >= 1".into()));
        }
        if let Some(rules) = &self.rules {
            if rules.is_empty() {
                return Err(HarnessError::Validation("rules must not be empty".into()));
            }
            for r in rules {
                parse_rule(r, 1.0)?;
            }
        }
        self.preset.validate()
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| self.preset.default_horizon())
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.preset.tag().to_string())
    }

    pub fn use_dd(&self) -> bool {
        match self.precision {
            Precision::F64 => false,
            Precision::Dd => true,
            Precision::Auto => self.preset.is_stylized(),
        }
    }

    /// `output_dir/name`, under `$FWLAB_OUTPUT_ROOT` when that is set and the
    /// directory is relative.
    pub fn artifact_dir(&self) -> PathBuf {
        let base = match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        };
        base.join(self.name())
    }

    /// Step rules to run, with `short-step` using the Euclidean constant `l`.
    pub fn step_rules(&self, l: f64) -> Result<Vec<StepRule>> {
        match &self.rules {
            Some(r) => r.iter().map(|s| parse_rule(s, l)).collect(),
            None => Ok(self.preset.default_rules()),
        }
    }
}

/// Expands the `[sweep]` table into one config per combination, named
/// `<name>__key=value__…`. Without a sweep table this is the base config.
pub fn expand_sweep(s: &str) -> Result<Vec<ExperimentConfig>> {
    let mut table: toml::Table = s.parse().map_err(|e: toml::de::Error| HarnessError::Validation(e.to_string()))?;
    let sweep = match table.remove("sweep") {
        None => return Ok(vec![ExperimentConfig::from_table(table)?]),
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(HarnessError::Validation("sweep must be a table".into())),
    };
    let mut combos: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (key, vals) in sweep {
        let toml::Value::Array(vals) = vals else {
            return Err(HarnessError::Validation(format!("sweep.{key} must be an array")));
        };
        if vals.is_empty() {
            return Err(HarnessError::Validation(format!("sweep.{key} is empty")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                let key = &key;
                vals.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    let base_name = table
        .get("name")
        .and_then(|v| v.as_str())
        .map(String::from)
        .or_else(|| table.get("preset").and_then(|v| v.as_str()).map(String::from))
        .unwrap_or_else(|| "sweep".into());
    combos
        .into_iter()
        .map(|combo| {
            let mut t = table.clone();
            let mut name = base_name.clone();
            for (k, v) in combo {
                name.push_str(&format!("__{k}={}", v.to_string().trim_matches('"')));
                t.insert(k, v);
            }
            t.insert("name".into(), toml::Value::String(name));
            ExperimentConfig::from_table(t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_strong1() {
        let c = ExperimentConfig::from_toml_str("preset = \"strong1\"\np = 2").unwrap();
        assert_eq!(
            c.preset,
            Preset::Strong1 {
                p: 2.0,
                n: 100,
                lambda: 0.2,
                ell: 4
            }
        );
        assert_eq!(c.horizon(), 100_000);
        assert!(c.use_dd());
    }

    #[test]
    fn rejects_out_of_range() {
        for doc in [
            "preset = \"strong1\"\np = 2.5",
            "preset = \"strong_r\"\np = 2",
            "preset = \"gaps\"\nrho = 1.5",
            "preset = \"strong1\"\np = 2\nT = 5",
            "preset = \"weak\"\np = 3\nrules = [\"open-loop-0\"]",
            "preset = \"nope\"",
        ] {
            let e = ExperimentConfig::from_toml_str(doc).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{doc}");
        }
    }

    #[test]
    fn sweep_is_cartesian() {
        let doc = "preset = \"gaps\"\nrho = 0.5\nT = 100\n[sweep]\nrho = [0.3, 0.7]\nell = [1, 2, 4]";
        let v = expand_sweep(doc).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0].name(), "gaps__ell=1__rho=0.3");
        assert!(v.iter().all(|c| c.horizon() == 100));
    }

    #[test]
    fn data_preset_keys() {
        let doc = "preset = \"regression\"\np = 2\nbeta_factor = 0.5\ndata = \"x.csv\"\nschema = \"dense_csv\"\ntarget_column = \"y\"";
        let c = ExperimentConfig::from_toml_str(doc).unwrap();
        assert!(!c.use_dd());
        match c.preset {
            Preset::Regression { source, .. } => assert_eq!(source.target_column.as_deref(), Some("y")),
            _ => panic!(),
        }
        assert!(ExperimentConfig::from_toml_str("preset = \"regression\"\np = 2\ndata = \"x.csv\"").is_err());
    }

    #[test]
    fn rule_labels_roundtrip() {
        for r in [StepRule::OpenLoop { ell: 3 }, StepRule::ExactLineSearch] {
            assert_eq!(parse_rule(&r.label(), 1.0).unwrap(), r);
        }
    }
}
