use clap::{Parser, Subcommand};
use fwlab::config::{expand_sweep, ExperimentConfig};
use fwlab::output::read_trace_column;
use fwlab::runner::{run_experiment_with, ArtifactSet, RunOptions};
use fwlab::{certify_config, HarnessError};
use fwlab_core::measures::default_window;
use fwlab_core::{fit_series, Execution, Measure};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fwlab", version, about = "Frank-Wolfe convergence experiments")]
struct Cli {
    /// Run rules and sweep members one after another.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one config (a `[sweep]` table is ignored).
    Run {
        config: PathBuf,
        /// Override the horizon T.
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
    },
    /// Run every combination of the config's `[sweep]` table.
    Sweep {
        config: PathBuf,
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
    },
    /// Sample growth constants and compare them with the closed form.
    Certify {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 16)]
        eta_grid: usize,
    },
    /// Fit a log-log slope to one column of a trace CSV.
    Rate {
        csv: PathBuf,
        #[arg(long, default_value = "subopt")]
        measure: String,
        /// `lo,hi`; defaults to the last decade of the trace.
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
    },
    /// Run a config and also write the theorem bound curves as CSV.
    Bounds {
        config: PathBuf,
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
    },
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if lo == 0 || lo >= hi {
        return Err("need 1 <= lo < hi".into());
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match dispatch(cli.cmd, exec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn with_horizon(mut cfg: ExperimentConfig, horizon: Option<usize>) -> ExperimentConfig {
    if horizon.is_some() {
        cfg.horizon = horizon;
    }
    cfg
}

fn dispatch(cmd: Cmd, exec: Execution) -> Result<ExitCode, HarnessError> {
    match cmd {
        Cmd::Run { config, horizon } => {
            let cfg = with_horizon(ExperimentConfig::load(&config)?, horizon);
            let art = run_experiment_with(&cfg, &RunOptions { exec, emit_bounds: false })?;
            summarize(&art);
            Ok(status(&[art]))
        }
        Cmd::Bounds { config, horizon } => {
            let cfg = with_horizon(ExperimentConfig::load(&config)?, horizon);
            let art = run_experiment_with(&cfg, &RunOptions { exec, emit_bounds: true })?;
            for p in &art.bounds_paths {
                println!("{}", p.display());
            }
            Ok(status(&[art]))
        }
        Cmd::Sweep { config, horizon } => {
            let text = std::fs::read_to_string(&config).map_err(|e| HarnessError::io(&config, e))?;
            let cfgs: Vec<ExperimentConfig> = expand_sweep(&text)?.into_iter().map(|c| with_horizon(c, horizon)).collect();
            for c in &cfgs {
                c.validate()?;
            }
            let opts = RunOptions { exec, emit_bounds: false };
            let arts: Vec<ArtifactSet> = fwlab_core::par::map_slice(exec, &cfgs, |c| run_experiment_with(c, &opts))
                .into_iter()
                .collect::<Result<_, _>>()?;
            for a in &arts {
                summarize(a);
            }
            Ok(status(&arts))
        }
        Cmd::Certify {
            config,
            samples,
            seeds,
            eta_grid,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rep = certify_config(&cfg, samples, &seeds, eta_grid, exec)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(if rep.holds() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Rate { csv, measure, window } => rate(&csv, &measure, window),
    }
}

fn rate(csv: &Path, measure: &str, window: Option<(usize, usize)>) -> Result<ExitCode, HarnessError> {
    let m = Measure::parse(measure).ok_or_else(|| HarnessError::Validation(format!("unknown measure {measure:?}")))?;
    let series = read_trace_column(csv, m)?;
    let t_max = series.last().map(|p| p.0).unwrap_or(0);
    let window = window.unwrap_or_else(|| default_window(t_max));
    let fit = fit_series(&series, window).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    println!(
        "{} slope {:.4} intercept {:.4} window [{}, {}] used {} dropped {} residual {:.3e}",
        m.name(),
        fit.slope,
        fit.intercept,
        fit.window.0,
        fit.window.1,
        fit.used,
        fit.dropped,
        fit.residual
    );
    Ok(ExitCode::SUCCESS)
}

fn summarize(art: &ArtifactSet) {
    let r = &art.report;
    println!("{} ({}, {}, T={}) -> {}", r.name, r.preset, r.precision, r.horizon, art.dir.display());
    for rule in &r.rules {
        let slope = |m| rule.slope(m).map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into());
        let dom_bad = rule.domination.iter().filter(|d| !d.holds()).count();
        println!(
            "  {:<14} subopt {:>7} primaldual {:>7} gap {:>7}  bounds {}/{} ok  fw-step {}  sandwich {}{}",
            rule.rule,
            slope(Measure::Subopt),
            slope(Measure::PrimalDual),
            slope(Measure::Gap),
            rule.domination.len() - dom_bad,
            rule.domination.len(),
            rule.fw_step_violations,
            rule.sandwich_violations,
            rule.aborted.as_deref().map(|a| format!("  ABORTED: {a}")).unwrap_or_default()
        );
    }
}

fn status(arts: &[ArtifactSet]) -> ExitCode {
    if arts.iter().any(|a| a.report.aborted()) {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
