//! The full pipeline: build φ, verify the hypothesis by sampling, solve the
//! grid, and assemble the report.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::control::ControlFunction;
use crate::direct::{report_exit_code, solve_grid, PointOutcome, StabilityReport};
use crate::equation::{EquationForm, MapEvaluator};
use crate::error::Result;
use crate::hypothesis::{random_tuples, verify_hypothesis, HypothesisReport};
use crate::modular::ModularSpec;
use crate::perturbation::{generate_perturbation, PerturbationDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationInfo {
    #[serde(flatten)]
    pub descriptor: PerturbationDescriptor,
    /// The envelope satisfies the hypothesis by construction.
    pub provable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub modular: String,
    pub equation: &'static str,
    pub perturbation: Option<PerturbationInfo>,
    pub hypothesis: Option<HypothesisReport>,
    pub stability: StabilityReport,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub json: String,
    pub exit_code: i32,
}

/// The perturbed map described by `cfg`.
pub fn build_map(
    cfg: &ExperimentConfig,
    spec: &ModularSpec,
    cf: &ControlFunction,
) -> Result<(MapEvaluator, Option<PerturbationInfo>)> {
    let form: EquationForm = cfg.equation.form;
    let tensor = cfg.tensor()?;
    let (perturbation, info) = match cfg.perturbation(cf, spec)? {
        Some(desc) => {
            let p = generate_perturbation(&desc, cf, spec, form)?;
            let info = PerturbationInfo {
                descriptor: desc,
                provable: p.provable(),
            };
            (Some(p), Some(info))
        }
        None => (None, None),
    };
    let map = MapEvaluator::new(cfg.domain_dimension(), spec.dimension, tensor, perturbation)?;
    Ok((map, info))
}

/// Runs the pipeline; writes the report when the config names an output.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let spec = cfg.modular_spec()?;
    let cf = cfg.control()?;
    let form = cfg.equation.form;
    let solver = cfg.solver_config()?;
    let (phi, perturbation) = build_map(cfg, &spec, &cf)?;
    solver.validate(&phi, &spec, &cf)?;

    let hypothesis = if cfg.verify.samples > 0 {
        let tuples = random_tuples(cfg.verify.seed, cfg.verify.samples, cfg.domain_dimension());
        Some(verify_hypothesis(form, &phi, &cf, &spec, &tuples)?)
    } else {
        None
    };
    let stability = solve_grid(&phi, &spec, &cf, &solver, form)?;
    let hypothesis_ok = hypothesis.as_ref().is_none_or(HypothesisReport::pass);
    let exit_code = if hypothesis_ok {
        report_exit_code(&stability)
    } else {
        1
    };

    let report = ExperimentReport {
        config: cfg.clone(),
        modular: spec.to_string(),
        equation: form.label(),
        perturbation,
        hypothesis,
        stability,
        exit_code,
    };
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &cfg.output.report {
        std::fs::write(cfg.resolve(out), &json)?;
    }
    Ok(ExperimentOutcome {
        report,
        json,
        exit_code,
    })
}

/// Human-readable summary of a report.
pub fn summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let st = &report.stability;
    let a = &st.aggregate;
    if let Some(name) = &report.config.name {
        let _ = writeln!(s, "experiment  {name}");
    }
    let _ = writeln!(s, "modular     {}", report.modular);
    let _ = writeln!(s, "equation    {}", report.equation);
    let _ = writeln!(s, "branch      {:?}", st.branch);
    if let Some(p) = &report.perturbation {
        let _ = writeln!(
            s,
            "perturbation seed {} {:?} (provable: {})",
            p.descriptor.seed, p.descriptor.envelope, p.provable
        );
    }
    match &report.hypothesis {
        Some(h) => {
            let _ = writeln!(
                s,
                "hypothesis  {}/{} tuples pass, worst ratio {:.3e}, {} zero-control cases",
                h.passed, h.samples, h.worst_ratio, h.zero_control_cases
            );
            for w in h.witnesses.iter().take(3) {
                let _ = writeln!(
                    s,
                    "  witness #{}: ({}, {}, {}, {}) ρ={:.3e} > α·α={:.3e}",
                    w.index, w.x, w.y, w.z, w.w, w.rho_residual, w.control
                );
            }
        }
        None => {
            let _ = writeln!(s, "hypothesis  not sampled");
        }
    }
    let _ = writeln!(
        s,
        "grid        {}/{} points pass, {} unconverged, worst slack {:.3e}",
        a.pass_count, a.points, a.failed_points, a.worst_slack
    );
    let _ = writeln!(
        s,
        "uniqueness  {}/{} points agree",
        a.uniqueness_pass_count, a.points
    );
    match &a.structural_checks {
        Some(c) => {
            let _ = writeln!(
                s,
                "structure   additive {} (worst {:.1e}), quadratic {} (worst {:.1e})",
                verdict(c.additive_first.passed),
                c.additive_first.worst,
                verdict(c.quadratic_second.passed),
                c.quadratic_second.worst
            );
            if let Some(f) = &c.forced_zero {
                let _ = writeln!(
                    s,
                    "forced zero {} (max ρ(H) {:.3e})",
                    verdict(f.passed),
                    f.max_rho
                );
            }
        }
        None => {
            let _ = writeln!(s, "structure   not checked");
        }
    }
    let rows: Vec<&PointOutcome> = st.points.iter().take(5).collect();
    for p in rows {
        match p {
            PointOutcome::Solved(r) => {
                let _ = writeln!(
                    s,
                    "  ({}; {}) n={} measured {:.3e} ≤ bound {:.3e} [{:?}] {}",
                    r.x,
                    r.z,
                    r.n_used,
                    r.measured,
                    r.bound,
                    r.branch_used_for_bound,
                    verdict(r.pass)
                );
            }
            PointOutcome::Failed(f) => {
                let _ = writeln!(s, "  ({}; {}) {}", f.x, f.z, f.error);
            }
        }
    }
    if st.points.len() > 5 {
        let _ = writeln!(s, "  … {} more points", st.points.len() - 5);
    }
    let _ = writeln!(s, "exit code   {}", report.exit_code);
    s
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
