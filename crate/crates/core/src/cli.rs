//! Command-line front end used by the `modstab` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::control::{series, ControlFunction, SeriesKind, SeriesResult};
use crate::direct::{solve_point, BranchKind};
use crate::dyadic::DyadicVector;
use crate::error::{Error, Result};
use crate::experiment::{build_map, run_experiment, summary};
use crate::modular::{axiom_samples, check_axioms, delta2_tau, ModularSpec};

#[derive(Debug, Parser)]
#[command(
    name = "modstab",
    version,
    about = "Stability experiments in modular spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the modular axioms on random samples.
    Axioms(AxiomsArgs),
    /// Evaluate the control series with certified tails.
    Series(SeriesArgs),
    /// Solve a single grid point.
    Solve(SolveArgs),
    /// Run the full experiment pipeline.
    Experiment(ExperimentArgs),
    /// Summarize a JSON report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct AxiomsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Power-modular exponent, when no config is given.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub dimension: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Δ₂ constant for the scale-down series.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Restrict to one branch (`up` or `down`).
    #[arg(long)]
    pub branch: Option<String>,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub x: String,
    /// Defaults to `x`.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    #[arg(long)]
    pub branch: Option<String>,
    /// Convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the perturbation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub branch: Option<String>,
    /// Convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub path: PathBuf,
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Axioms(a) => axioms(a),
        Command::Series(a) => series_cmd(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn axioms(a: AxiomsArgs) -> Result<i32> {
    let spec = match (&a.config, a.p) {
        (Some(path), _) => ExperimentConfig::load(path)?.modular_spec()?,
        (None, Some(p)) => ModularSpec::power(p, a.dimension)?,
        (None, None) => return Err(Error::Config("axioms needs --config or --p".into())),
    };
    let samples = axiom_samples(a.seed, a.samples, spec.dimension);
    let report = check_axioms(&spec, &samples)?;
    let values: Vec<_> = samples.iter().map(|(u, _, _)| u.clone()).collect();
    let tau = delta2_tau(&spec, Some(&values)).ok();
    print_json(&json!({
        "modular": spec.to_string(),
        "convex": spec.convex,
        "delta2_tau": tau,
        "axioms": report,
        "consistent_with_flags": report.consistent_with(&spec),
    }))?;
    Ok(if report.consistent_with(&spec) { 0 } else { 1 })
}

fn series_cmd(a: SeriesArgs) -> Result<i32> {
    let (cf, cfg_tau) = match &a.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            (cfg.control()?, cfg.modular_spec()?.delta2_tau)
        }
        None => {
            let cf = match (a.epsilon, a.theta, a.r) {
                (Some(e), None, None) => ControlFunction::constant(e)?,
                (None, Some(t), Some(r)) => ControlFunction::power(t, r)?,
                _ => {
                    return Err(Error::Config(
                        "series needs --config, --epsilon, or --theta with --r".into(),
                    ))
                }
            };
            (cf, None)
        }
    };
    let tau = a.tau.or(cfg_tau);
    let x: DyadicVector = a.x.parse()?;
    let y: DyadicVector = match &a.y {
        Some(y) => y.parse()?,
        None => x.clone(),
    };
    let branch = a
        .branch
        .as_deref()
        .map(str::parse::<BranchKind>)
        .transpose()?;
    let mut kinds = Vec::new();
    if branch != Some(BranchKind::ScaleDown) {
        kinds.extend([SeriesKind::PhiUp, SeriesKind::PsiUp]);
    }
    if branch != Some(BranchKind::ScaleUp) {
        match tau {
            Some(tau) => kinds.extend([SeriesKind::PhiDown { tau }, SeriesKind::PsiDown { tau }]),
            None if branch.is_some() => {
                return Err(Error::Config(
                    "scale-down series need --tau or a config".into(),
                ))
            }
            None => {}
        }
    }
    let rows = kinds
        .into_iter()
        .map(|k| Ok((k, series(k, &cf, &x, &y, a.tol)?)))
        .collect::<Result<Vec<(SeriesKind, SeriesResult)>>>()?;
    let out: Vec<Value> = rows
        .iter()
        .map(|(k, s)| json!({ "kind": k, "result": s }))
        .collect();
    print_json(&json!({ "x": x, "y": y, "tol": a.tol, "series": out }))?;
    Ok(0)
}

fn solve(a: SolveArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    apply_overrides(&mut cfg, a.seed, a.branch, a.tol);
    let spec = cfg.modular_spec()?;
    let cf = cfg.control()?;
    let mut solver = cfg.solver_config()?;
    let (x, z): (DyadicVector, DyadicVector) = (a.x.parse()?, a.z.parse()?);
    solver.grid = vec![(x.clone(), z.clone())];
    let (phi, _) = build_map(&cfg, &spec, &cf)?;
    solver.validate(&phi, &spec, &cf)?;
    let p = solve_point(&phi, &spec, &cf, &solver, &x, &z)?;
    print_json(&p)?;
    Ok(if p.pass && p.uniqueness.pass { 0 } else { 1 })
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    seed: Option<u64>,
    branch: Option<String>,
    tol: Option<f64>,
) {
    if let (Some(seed), Some(p)) = (seed, cfg.perturbation.as_mut()) {
        p.seed = seed;
    }
    if let Some(b) = branch {
        cfg.solver.branch = b;
    }
    if let Some(t) = tol {
        cfg.solver.conv_tol = t;
    }
}

fn experiment(a: ExperimentArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    apply_overrides(&mut cfg, a.seed, a.branch, a.tol);
    if let Some(out) = a.out {
        // relative to the working directory, not the config
        cfg.output.report = Some(std::path::absolute(&out)?);
    }
    let outcome = run_experiment(&cfg)?;
    if a.json {
        println!("{}", outcome.json);
    } else {
        print!("{}", summary(&outcome.report));
    }
    Ok(outcome.exit_code)
}

fn report(a: ReportArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.path)?;
    let v: Value = serde_json::from_str(&text)?;
    let s = &v["stability"];
    let agg = &s["aggregate"];
    println!("report      {}", a.path.display());
    if let Some(name) = v["config"]["name"].as_str() {
        println!("experiment  {name}");
    }
    println!("modular     {}", v["modular"].as_str().unwrap_or("?"));
    println!("equation    {}", v["equation"].as_str().unwrap_or("?"));
    println!("branch      {}", s["branch"].as_str().unwrap_or("?"));
    if let Some(h) = v.get("hypothesis").filter(|h| !h.is_null()) {
        println!(
            "hypothesis  {}/{} tuples pass, worst ratio {}",
            h["passed"], h["samples"], h["worst_ratio"]
        );
    }
    println!(
        "grid        {}/{} points pass, worst slack {}",
        agg["pass_count"], agg["points"], agg["worst_slack"]
    );
    println!(
        "uniqueness  {}/{} points agree",
        agg["uniqueness_pass_count"], agg["points"]
    );
    if let Some(points) = s["points"].as_array() {
        for p in points {
            match p.get("error") {
                Some(e) => println!("  ({}; {}) {}", p["x"], p["z"], e),
                None => println!(
                    "  ({}; {}) measured {} bound {} pass {}",
                    p["x"].as_str().unwrap_or("?"),
                    p["z"].as_str().unwrap_or("?"),
                    p["measured"],
                    p["bound"],
                    p["pass"]
                ),
            }
        }
    }
    println!("exit code   {}", v["exit_code"]);
    Ok(0)
}
