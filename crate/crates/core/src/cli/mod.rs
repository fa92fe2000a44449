//! Config-driven experiment runner behind the `mixthresh` binary.
//!
//! ```text
//! mixthresh shrink-table|solve|decompose|regpath --config <path> --out <dir> [--seed N] [--quiet]
//! ```
//!
//! Exit codes: 0 on success, 2 on a config error, 3 when an objective trace
//! increases by more than [`MONOTONE_SLACK`]. Outputs are written to the
//! out directory via temp file and rename, and carry no timestamps, so a
//! fixed config and seed reproduce them byte for byte.
//!
//! Output schemas (column order is stable):
//!
//! | command      | files                                              |
//! |--------------|----------------------------------------------------|
//! | shrink-table | `shrink_table.csv` (`b,s`)                         |
//! | solve        | `coefficients.csv` (`index,value`), `trace.csv`, `summary.json` |
//! | decompose    | `u.csv`, `v.csv`, `sum.csv` (`index,value`), `trace.csv`, `summary.json` |
//! | regpath      | `regpath.csv` (`level,eps,alpha,noise_norm,error,iters`), `summary.json` |
//!
//! `trace.csv` has columns `iter,objective,surrogate,step_norm,iterate_norm`,
//! in the renormalized scale the iteration runs in.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::model::{penalty_value, Problem, ProblemShape};
use crate::operators::renormalize;
use crate::regpath::{make_schedule, run_regpath, TrendVerdict};
use crate::shrinkage::shrink_multi;
use crate::solver::{
    decomposition_problem, fixed_point_residual, solve_with_stride, SolveTrace, StopReason,
    MONOTONE_SLACK,
};
use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mixthresh",
    version,
    about = "Iterative thresholding experiments with mixed lp penalties"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate the shrinkage map over a grid of inputs.
    ShrinkTable(RunArgs),
    /// Run the thresholded iteration on one problem.
    Solve(RunArgs),
    /// Split the data into two components with separate penalties.
    Decompose(RunArgs),
    /// Sweep decreasing noise levels and track the error to the minimal solution.
    Regpath(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's `seed` (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Self::ShrinkTable(a) | Self::Solve(a) | Self::Decompose(a) | Self::Regpath(a) => a,
        }
    }
}

/// Files written by a command, plus a one-line report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub message: String,
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let args = command.args();
    let cfg = config::load(&args.config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let mut out = Output::new(&args.out)?;
    let message = match command {
        Command::ShrinkTable(_) => shrink_table(&cfg, &mut out)?,
        Command::Solve(_) => solve(&cfg, seed, &mut out)?,
        Command::Decompose(_) => decompose(&cfg, seed, &mut out)?,
        Command::Regpath(_) => regpath(&cfg, seed, &mut out)?,
    };
    out.finish(message)
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
    failure: Option<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            failure: None,
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
        fs::write(&tmp, contents).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Records a monotonicity failure; outputs are still written.
    fn check(&mut self, trace: &SolveTrace, context: &str) {
        if let Err(v) = trace.check_monotone(MONOTONE_SLACK) {
            self.failure.get_or_insert(format!(
                "{context}: objective increased by {:e} at iteration {}",
                v.increase, v.iter
            ));
        }
    }

    fn finish(self, message: String) -> Result<Outcome, CliError> {
        match self.failure {
            Some(f) => Err(CliError::Numerical(f)),
            None => Ok(Outcome {
                files: self.files,
                message,
            }),
        }
    }
}

fn vector_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", v + 0.0);
    }
    out
}

fn shrink_table(cfg: &ExperimentConfig, out: &mut Output) -> Result<String, CliError> {
    let table = cfg
        .shrink_table
        .as_ref()
        .ok_or_else(|| CliError::Config("shrink_table: missing section".into()))?;
    let terms = table.terms()?;
    let grid = table.grid()?;
    let mut csv = String::from("b,s\n");
    for b in &grid {
        // + 0.0 folds -0 into 0
        let _ = writeln!(csv, "{b},{}", shrink_multi(*b, &terms) + 0.0);
    }
    out.write("shrink_table.csv", &csv)?;
    Ok(format!("tabulated {} points", grid.len()))
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    seed: u64,
    dimension: usize,
    objective: f64,
    penalty: f64,
    residual_norm: f64,
    scaled_objective: f64,
    fixed_point_residual: f64,
    iterations: usize,
    stop_reason: StopReason,
    final_step_norm: f64,
    step_tol: f64,
    monotone: bool,
    worst_increase: f64,
    scale: f64,
}

fn solve(cfg: &ExperimentConfig, seed: u64, out: &mut Output) -> Result<String, CliError> {
    let op = cfg.operator()?;
    let n = op.domain_dim();
    let penalty = cfg.penalty_section("penalty")?.build(n, "penalty")?;
    let g = cfg.data(op.as_ref(), seed)?;
    let f0 = cfg.initial_point(n)?;
    let stop = cfg.stop_rule()?;
    let prob = Problem::new(op, g, penalty)?;
    let (scaled, scale) = renormalize(&prob)?;
    let (f, trace) = solve_with_stride(&f0, &scaled, stop, cfg.solver.trace_stride)?;

    out.write("coefficients.csv", &vector_csv(&f))?;
    out.write("trace.csv", &trace.to_csv())?;
    let summary = SolveSummary {
        seed,
        dimension: n,
        objective: prob.objective(&f)?,
        penalty: penalty_value(&f, prob.penalty())?,
        residual_norm: prob.residual_norm(&f)?,
        scaled_objective: scaled.objective(&f)?,
        fixed_point_residual: fixed_point_residual(&f, &scaled)?,
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason(),
        final_step_norm: trace.final_step_norm(),
        step_tol: stop.step_tol,
        monotone: trace.check_monotone(MONOTONE_SLACK).is_ok(),
        worst_increase: trace.worst_increase(),
        scale,
    };
    out.json("summary.json", &summary)?;
    out.check(&trace, "solve");
    Ok(format!(
        "{} iterations, objective {:.6e}, fixed-point residual {:.3e}",
        summary.iterations, summary.objective, summary.fixed_point_residual
    ))
}

#[derive(Debug, Serialize)]
struct DecomposeSummary {
    seed: u64,
    dimension: usize,
    objective: f64,
    residual_norm: f64,
    noise_norm: f64,
    penalty_u: f64,
    penalty_v: f64,
    u_norm: f64,
    v_norm: f64,
    fixed_point_residual: f64,
    iterations: usize,
    stop_reason: StopReason,
    final_step_norm: f64,
    monotone: bool,
    worst_increase: f64,
    scale: f64,
}

fn decompose(cfg: &ExperimentConfig, seed: u64, out: &mut Output) -> Result<String, CliError> {
    let op = cfg.operator()?;
    let n = op.domain_dim();
    let spec_u = cfg.penalty_section("penalty_u")?.build(n, "penalty_u")?;
    let spec_v = cfg.penalty_section("penalty_v")?.build(n, "penalty_v")?;
    let g = cfg.data(op.as_ref(), seed)?;
    let f0 = cfg.initial_point(2 * n)?;
    let stop = cfg.stop_rule()?;
    let prob = decomposition_problem(op, g, &spec_u, &spec_v)?;
    let (scaled, scale) = renormalize(&prob)?;
    let (f, trace) = solve_with_stride(&f0, &scaled, stop, cfg.solver.trace_stride)?;
    let (u, v) = f.split_at(n);
    let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();

    out.write("u.csv", &vector_csv(u))?;
    out.write("v.csv", &vector_csv(v))?;
    out.write("sum.csv", &vector_csv(&sum))?;
    out.write("trace.csv", &trace.to_csv())?;
    let summary = DecomposeSummary {
        seed,
        dimension: n,
        objective: prob.objective(&f)?,
        residual_norm: prob.residual_norm(&f)?,
        noise_norm: cfg.signal.as_ref().map_or(0.0, |s| s.noise),
        penalty_u: penalty_value(u, &spec_u)?,
        penalty_v: penalty_value(v, &spec_v)?,
        u_norm: crate::model::norm(u),
        v_norm: crate::model::norm(v),
        fixed_point_residual: fixed_point_residual(&f, &scaled)?,
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason(),
        final_step_norm: trace.final_step_norm(),
        monotone: trace.check_monotone(MONOTONE_SLACK).is_ok(),
        worst_increase: trace.worst_increase(),
        scale,
    };
    out.json("summary.json", &summary)?;
    out.check(&trace, "decompose");
    Ok(format!(
        "{} iterations, residual {:.3e}, |u| {:.3e}, |v| {:.3e}",
        summary.iterations, summary.residual_norm, summary.u_norm, summary.v_norm
    ))
}

#[derive(Debug, Serialize)]
struct RegpathSummary {
    seed: u64,
    levels: usize,
    verdict: TrendVerdict,
    monotone: bool,
}

fn regpath(cfg: &ExperimentConfig, seed: u64, out: &mut Output) -> Result<String, CliError> {
    let rp = cfg
        .regpath
        .as_ref()
        .ok_or_else(|| CliError::Config("regpath: missing section".into()))?;
    let op = cfg.operator()?;
    let n = op.domain_dim();
    config::expect_len("regpath.truth", n, rp.truth.len())?;
    if !(rp.error_target > 0.0 && rp.error_target.is_finite()) {
        return Err(CliError::Config(format!(
            "regpath.error_target: must be positive, got {}",
            rp.error_target
        )));
    }
    let penalty = cfg.penalty_section("penalty")?.build(n, "penalty")?;
    let schedule = make_schedule(
        rp.eps0,
        rp.ratio,
        rp.levels,
        rp.exponent,
        penalty.group_count(),
    )
    .map_err(|e| CliError::Config(format!("regpath: {e}")))?;
    let stop = cfg.stop_rule()?;
    let shape = ProblemShape::new(op, penalty)?;
    let report = run_regpath(
        &rp.truth,
        &shape,
        &schedule,
        seed,
        stop,
        rp.nullspace.as_deref(),
    )?;

    out.write("regpath.csv", &report.to_csv())?;
    let monotone = report
        .records
        .iter()
        .all(|r| r.worst_increase <= MONOTONE_SLACK);
    let verdict = report.verdict(rp.error_target);
    out.json(
        "summary.json",
        &RegpathSummary {
            seed,
            levels: schedule.len(),
            verdict,
            monotone,
        },
    )?;
    if let Some(r) = report
        .records
        .iter()
        .find(|r| r.worst_increase > MONOTONE_SLACK)
    {
        out.failure = Some(format!(
            "regpath level {}: objective increased by {:e}",
            r.level, r.worst_increase
        ));
    }
    Ok(format!(
        "{} levels, final error {:.3e}, trend {}",
        schedule.len(),
        verdict.final_error,
        if verdict.passed { "passed" } else { "failed" }
    ))
}
