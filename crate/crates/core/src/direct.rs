//! Direct-method iterations: approximants, a-priori Cauchy tails, the limit
//! map and its certification against the stability bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::control::{
    alpha_eval, series_partial, series_remainder, stability_bound, BoundTerm, ControlFunction,
    Regime, SeriesKind,
};
use crate::dyadic::{ldexp, DyadicVector};
use crate::equation::{
    check_additive_first, check_quadratic_second, EquationForm, StructuralCheck, TwoSlotMap,
};
use crate::error::{Error, Result};
use crate::modular::{rho, ModularSpec, ValueVector, CONVERGENCE_TOL};

pub const MAX_ITERATIONS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    /// Needs the Fatou property.
    ScaleUp,
    /// Needs a Δ₂ constant.
    ScaleDown,
}

impl BranchKind {
    pub fn regime(&self, spec: &ModularSpec) -> Result<Regime> {
        match self {
            BranchKind::ScaleUp => {
                if !spec.fatou {
                    return Err(Error::Precondition(
                        "scale-up branch needs a modular with the Fatou property".into(),
                    ));
                }
                Ok(Regime::ScaleUp)
            }
            BranchKind::ScaleDown => match spec.delta2_tau {
                Some(tau) => Ok(Regime::ScaleDown { tau }),
                None => Err(Error::Precondition(
                    "scale-down branch needs a Δ₂ constant on the modular".into(),
                )),
            },
        }
    }
}

impl std::str::FromStr for BranchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" | "scale_up" | "scaleup" => Ok(BranchKind::ScaleUp),
            "down" | "scale_down" | "scaledown" => Ok(BranchKind::ScaleDown),
            other => Err(Error::Config(format!(
                "unknown branch {other:?}; use up or down"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    /// Scaling in `x`; limit `A`.
    First,
    /// Scaling in `z`; limit `C`.
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub branch: BranchKind,
    pub max_n: u32,
    pub conv_tol: f64,
    /// Tolerance for the bound series.
    pub bound_tol: f64,
    pub uniqueness_tol: f64,
    #[serde(skip)]
    pub grid: Vec<(DyadicVector, DyadicVector)>,
}

impl SolverConfig {
    pub fn new(branch: BranchKind, grid: Vec<(DyadicVector, DyadicVector)>) -> Self {
        SolverConfig {
            branch,
            max_n: MAX_ITERATIONS,
            conv_tol: CONVERGENCE_TOL,
            bound_tol: 1e-12,
            uniqueness_tol: 1e-5,
            grid,
        }
    }

    /// Checks limits, branch prerequisites against `spec`, and that both
    /// series of the branch converge for `cf`. Returns the regime.
    pub fn validate(
        &self,
        phi: &dyn TwoSlotMap,
        spec: &ModularSpec,
        cf: &ControlFunction,
    ) -> Result<Regime> {
        if !(1..=MAX_ITERATIONS).contains(&self.max_n) {
            return Err(Error::Config(format!(
                "max_n must be in 1..={MAX_ITERATIONS}, got {}",
                self.max_n
            )));
        }
        for (name, v) in [
            ("conv_tol", self.conv_tol),
            ("bound_tol", self.bound_tol),
            ("uniqueness_tol", self.uniqueness_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.grid.is_empty() {
            return Err(Error::Config("grid must be non-empty".into()));
        }
        let (dx, dy) = phi.dims();
        if dy != spec.dimension {
            return Err(Error::Config(format!(
                "map output dimension {dy} differs from modular dimension {}",
                spec.dimension
            )));
        }
        if let Some((x, z)) = self
            .grid
            .iter()
            .find(|(x, z)| x.dim() != dx || z.dim() != dx)
        {
            return Err(Error::Config(format!(
                "grid point ({x}; {z}) does not have dimension {dx}"
            )));
        }
        let regime = self.branch.regime(spec)?;
        for kind in [regime.first_series(), regime.second_series()] {
            if let Some(ratio) = cf.ratio(kind) {
                if ratio >= 1.0 {
                    return Err(Error::Divergent(format!(
                        "{kind:?} has term ratio {ratio} ≥ 1 for this control function"
                    )));
                }
            }
            if cf.limit_condition(kind) == Some(false) {
                return Err(Error::Divergent(format!(
                    "{kind:?}: the scaled control does not vanish under halving"
                )));
            }
        }
        Ok(regime)
    }
}

/// One scaled evaluation of `φ` for the given branch and slot.
pub fn approximant(
    branch: BranchKind,
    slot: Slot,
    phi: &dyn TwoSlotMap,
    x: &DyadicVector,
    z: &DyadicVector,
    n: u32,
) -> Result<ValueVector> {
    let k = n as i64;
    let (xs, zs, log2_factor) = match (branch, slot) {
        (BranchKind::ScaleUp, Slot::First) => (x.scale_pow2(k)?, z.clone(), -k),
        (BranchKind::ScaleUp, Slot::Second) => (x.clone(), z.scale_pow2(k)?, -2 * k),
        (BranchKind::ScaleDown, Slot::First) => (x.scale_pow2(-k)?, z.clone(), k),
        (BranchKind::ScaleDown, Slot::Second) => (x.clone(), z.scale_pow2(-k)?, 2 * k),
    };
    let v = phi.eval(&xs, &zs)?;
    let out = ValueVector::new(v.coords().iter().map(|&c| ldexp(c, log2_factor)).collect());
    if !out.is_finite() {
        return Err(Error::ApproximantOverflow { n });
    }
    Ok(out)
}

fn tail_parts(
    regime: Regime,
    slot: Slot,
    cf: &ControlFunction,
    x: &DyadicVector,
    z: &DyadicVector,
) -> Result<(SeriesKind, DyadicVector, f64)> {
    let zero = DyadicVector::zeros(x.dim());
    Ok(match slot {
        Slot::First => (regime.first_series(), x.clone(), alpha_eval(cf, z, &zero)?),
        Slot::Second => (regime.second_series(), z.clone(), alpha_eval(cf, x, &zero)?),
    })
}

/// Prefactor in front of the scale-down sums at index `m`.
fn tail_prefactor(regime: Regime, slot: Slot, m: u32) -> f64 {
    match regime {
        Regime::ScaleUp => 1.0,
        Regime::ScaleDown { tau } => {
            let m = m as f64;
            match slot {
                // (1/τ)(2/τ)^m
                Slot::First => (m - (m + 1.0) * tau.log2()).exp2(),
                // 2^m / τ^{m+2}
                Slot::Second => (m - (m + 2.0) * tau.log2()).exp2(),
            }
        }
    }
}

/// A-priori bound on the ρ-distance between the `m`-th and `n`-th
/// approximants.
#[allow(clippy::too_many_arguments)]
pub fn cauchy_tail(
    branch: BranchKind,
    slot: Slot,
    cf: &ControlFunction,
    tau: Option<f64>,
    x: &DyadicVector,
    z: &DyadicVector,
    m: u32,
    n: u32,
) -> Result<f64> {
    if m >= n {
        return Err(Error::Precondition(format!(
            "cauchy tail needs m < n, got m={m}, n={n}"
        )));
    }
    let regime = regime_of(branch, tau)?;
    let (kind, point, other) = tail_parts(regime, slot, cf, x, z)?;
    let sum = series_partial(kind, cf, &point, &point, m as u64, n as u64)?;
    Ok(tail_prefactor(regime, slot, m) * sum * other)
}

/// The `n → ∞` limit of [`cauchy_tail`]; infinite when divergent.
pub fn cauchy_remainder(
    branch: BranchKind,
    slot: Slot,
    cf: &ControlFunction,
    tau: Option<f64>,
    x: &DyadicVector,
    z: &DyadicVector,
    m: u32,
) -> Result<f64> {
    let regime = regime_of(branch, tau)?;
    let (kind, point, other) = tail_parts(regime, slot, cf, x, z)?;
    let rem = series_remainder(kind, cf, &point, &point, m as u64)?;
    if other == 0.0 {
        return Ok(0.0);
    }
    Ok(tail_prefactor(regime, slot, m) * rem * other)
}

fn regime_of(branch: BranchKind, tau: Option<f64>) -> Result<Regime> {
    match (branch, tau) {
        (BranchKind::ScaleUp, _) => Ok(Regime::ScaleUp),
        (BranchKind::ScaleDown, Some(tau)) => Ok(Regime::ScaleDown { tau }),
        (BranchKind::ScaleDown, None) => Err(Error::Precondition(
            "scale-down tails need the Δ₂ constant τ".into(),
        )),
    }
}

fn tau_of(regime: Regime) -> Option<f64> {
    match regime {
        Regime::ScaleUp => None,
        Regime::ScaleDown { tau } => Some(tau),
    }
}

fn slot_name(slot: Slot) -> &'static str {
    match slot {
        Slot::First => "first",
        Slot::Second => "second",
    }
}

/// Smallest `n ≤ max_n` whose remainder is below `tol`.
fn stopping_index(
    branch: BranchKind,
    slot: Slot,
    cf: &ControlFunction,
    tau: Option<f64>,
    x: &DyadicVector,
    z: &DyadicVector,
    config: &SolverConfig,
) -> Result<std::result::Result<u32, f64>> {
    let mut last = f64::INFINITY;
    for n in 0..=config.max_n {
        last = cauchy_remainder(branch, slot, cf, tau, x, z, n)?;
        if last < config.conv_tol {
            return Ok(Ok(n));
        }
    }
    Ok(Err(last))
}

/// Iteration history of one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotTrace {
    pub n_used: u32,
    /// `ρ(H_{m+1} − H_m)` for `m = 0 .. n_used − 1`.
    pub increments: Vec<f64>,
    /// `cauchy_tail(m, m + 1)` for the same `m`.
    pub step_tails: Vec<f64>,
    /// Remainder bound at `n_used`.
    pub remainder: f64,
}

#[allow(clippy::too_many_arguments)]
fn trace_slot(
    phi: &dyn TwoSlotMap,
    spec: &ModularSpec,
    cf: &ControlFunction,
    regime: Regime,
    config: &SolverConfig,
    slot: Slot,
    x: &DyadicVector,
    z: &DyadicVector,
) -> Result<(ValueVector, SlotTrace)> {
    let branch = config.branch;
    let tau = tau_of(regime);
    let stop = stopping_index(branch, slot, cf, tau, x, z, config)?;
    let n_used = match stop {
        Ok(n) => n,
        Err(_) => config.max_n,
    };
    let mut prev = approximant(branch, slot, phi, x, z, 0)?;
    let mut increments = Vec::with_capacity(n_used as usize);
    let mut step_tails = Vec::with_capacity(n_used as usize);
    for m in 0..n_used {
        let next = approximant(branch, slot, phi, x, z, m + 1)?;
        increments.push(rho(spec, &(&next - &prev)));
        step_tails.push(cauchy_tail(branch, slot, cf, tau, x, z, m, m + 1)?);
        prev = next;
    }
    match stop {
        Ok(n) => Ok((
            prev,
            SlotTrace {
                n_used: n,
                increments,
                step_tails,
                remainder: cauchy_remainder(branch, slot, cf, tau, x, z, n)?,
            },
        )),
        Err(tail) => Err(Error::NonConvergence {
            slot: slot_name(slot).into(),
            max_n: config.max_n,
            increments,
            tail,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessCheck {
    pub pass: bool,
    /// `ρ((H_A − H_C) / 2)`.
    pub distance: f64,
}

pub fn uniqueness_check(
    h_a: &ValueVector,
    h_c: &ValueVector,
    spec: &ModularSpec,
    tol: f64,
) -> UniquenessCheck {
    let distance = rho(spec, &(h_a - h_c).scale(0.5));
    UniquenessCheck {
        pass: distance <= tol,
        distance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub x: DyadicVector,
    pub z: DyadicVector,
    pub n_used: u32,
    pub h_a: ValueVector,
    pub h_c: ValueVector,
    pub first: SlotTrace,
    pub second: SlotTrace,
    /// `ρ(φ(x, z) − H_A(x, z))`.
    pub measured: f64,
    pub bound: f64,
    pub branch_used_for_bound: BoundTerm,
    pub pass: bool,
    pub uniqueness: UniquenessCheck,
}

pub fn bound_pass(measured: f64, bound: f64) -> bool {
    measured <= bound * (1.0 + 1e-6) + 1e-9
}

pub fn solve_point(
    phi: &dyn TwoSlotMap,
    spec: &ModularSpec,
    cf: &ControlFunction,
    config: &SolverConfig,
    x: &DyadicVector,
    z: &DyadicVector,
) -> Result<PointResult> {
    let regime = config.branch.regime(spec)?;
    solve_point_in(phi, spec, cf, regime, config, x, z)
}

fn solve_point_in(
    phi: &dyn TwoSlotMap,
    spec: &ModularSpec,
    cf: &ControlFunction,
    regime: Regime,
    config: &SolverConfig,
    x: &DyadicVector,
    z: &DyadicVector,
) -> Result<PointResult> {
    let (h_a, first) = trace_slot(phi, spec, cf, regime, config, Slot::First, x, z)?;
    let (h_c, second) = trace_slot(phi, spec, cf, regime, config, Slot::Second, x, z)?;
    let measured = rho(spec, &(&phi.eval(x, z)? - &h_a));
    let b = stability_bound(regime, cf, x, z, config.bound_tol)?;
    Ok(PointResult {
        x: x.clone(),
        z: z.clone(),
        n_used: first.n_used.max(second.n_used),
        uniqueness: uniqueness_check(&h_a, &h_c, spec, config.uniqueness_tol),
        h_a,
        h_c,
        first,
        second,
        measured,
        bound: b.value,
        branch_used_for_bound: b.term,
        pass: bound_pass(measured, b.value),
    })
}

/// `H_A` as a map, each evaluation iterated to its own stopping index.
pub struct LimitMap<'a> {
    phi: &'a dyn TwoSlotMap,
    cf: &'a ControlFunction,
    regime: Regime,
    config: &'a SolverConfig,
    slot: Slot,
}

impl<'a> LimitMap<'a> {
    pub fn new(
        phi: &'a dyn TwoSlotMap,
        spec: &ModularSpec,
        cf: &'a ControlFunction,
        config: &'a SolverConfig,
        slot: Slot,
    ) -> Result<Self> {
        Ok(LimitMap {
            phi,
            cf,
            regime: config.branch.regime(spec)?,
            config,
            slot,
        })
    }
}

impl TwoSlotMap for LimitMap<'_> {
    fn dims(&self) -> (usize, usize) {
        self.phi.dims()
    }

    fn eval(&self, x: &DyadicVector, z: &DyadicVector) -> Result<ValueVector> {
        let branch = self.config.branch;
        let tau = tau_of(self.regime);
        match stopping_index(branch, self.slot, self.cf, tau, x, z, self.config)? {
            Ok(n) => approximant(branch, self.slot, self.phi, x, z, n),
            Err(tail) => Err(Error::NonConvergence {
                slot: slot_name(self.slot).into(),
                max_n: self.config.max_n,
                increments: Vec::new(),
                tail,
            }),
        }
    }
}

/// A grid point that could not be iterated to tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub x: DyadicVector,
    pub z: DyadicVector,
    pub error: String,
    pub increments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointOutcome {
    Solved(PointResult),
    Failed(PointFailure),
}

impl PointOutcome {
    pub fn pass(&self) -> bool {
        matches!(self, PointOutcome::Solved(p) if p.pass)
    }

    pub fn result(&self) -> Option<&PointResult> {
        match self {
            PointOutcome::Solved(p) => Some(p),
            PointOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcedZeroCheck {
    pub passed: bool,
    /// Largest `ρ(H_A)` or `ρ(H_C)` over the grid.
    pub max_rho: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralChecks {
    pub additive_first: StructuralCheck,
    pub quadratic_second: StructuralCheck,
    /// `paper_aq` only: the limit should vanish.
    pub forced_zero: Option<ForcedZeroCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub points: usize,
    pub pass_count: usize,
    pub failed_points: usize,
    /// `min(bound − measured)` over solved points.
    pub worst_slack: f64,
    pub uniqueness_pass_count: usize,
    pub structural_checks: Option<StructuralChecks>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub branch: BranchKind,
    pub regime: Regime,
    pub form: EquationForm,
    pub points: Vec<PointOutcome>,
    pub aggregate: Aggregate,
}

impl StabilityReport {
    pub fn all_pass(&self) -> bool {
        self.aggregate.pass_count == self.aggregate.points
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn structural_checks(
    phi: &dyn TwoSlotMap,
    spec: &ModularSpec,
    cf: &ControlFunction,
    config: &SolverConfig,
    form: EquationForm,
    solved: &[&PointResult],
) -> Result<StructuralChecks> {
    let grid = &config.grid;
    let limit = LimitMap::new(phi, spec, cf, config, Slot::First)?;
    let pairs: Vec<_> = (0..grid.len())
        .map(|i| {
            let j = (i + 1) % grid.len();
            (grid[i].0.clone(), grid[j].0.clone(), grid[i].1.clone())
        })
        .collect();
    let triples: Vec<_> = (0..grid.len())
        .map(|i| {
            let j = (i + 1) % grid.len();
            (grid[i].0.clone(), grid[i].1.clone(), grid[j].1.clone())
        })
        .collect();
    let scale = solved
        .iter()
        .map(|p| p.h_a.max_abs())
        .fold(1.0f64, f64::max);
    let tol = 6.0 * spec.coordinate_radius(config.conv_tol) + 1e-12 * scale;
    let forced_zero = (form == EquationForm::PaperAQ).then(|| {
        let max_rho = solved
            .iter()
            .map(|p| rho(spec, &p.h_a).max(rho(spec, &p.h_c)))
            .fold(0.0, f64::max);
        ForcedZeroCheck {
            passed: max_rho <= config.conv_tol,
            max_rho,
            tol: config.conv_tol,
        }
    });
    Ok(StructuralChecks {
        additive_first: check_additive_first(&limit, &pairs, tol)?,
        quadratic_second: check_quadratic_second(&limit, &triples, tol)?,
        forced_zero,
    })
}

/// Solves every grid point (in parallel, merged in grid order).
pub fn solve_grid(
    phi: &dyn TwoSlotMap,
    spec: &ModularSpec,
    cf: &ControlFunction,
    config: &SolverConfig,
    form: EquationForm,
) -> Result<StabilityReport> {
    let regime = config.validate(phi, spec, cf)?;
    let points = config
        .grid
        .par_iter()
        .map(
            |(x, z)| match solve_point_in(phi, spec, cf, regime, config, x, z) {
                Ok(p) => Ok(PointOutcome::Solved(p)),
                Err(e @ (Error::NonConvergence { .. } | Error::ApproximantOverflow { .. })) => {
                    let increments = match &e {
                        Error::NonConvergence { increments, .. } => increments.clone(),
                        _ => Vec::new(),
                    };
                    Ok(PointOutcome::Failed(PointFailure {
                        x: x.clone(),
                        z: z.clone(),
                        error: e.to_string(),
                        increments,
                    }))
                }
                Err(e) => Err(e),
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let solved: Vec<&PointResult> = points.iter().filter_map(PointOutcome::result).collect();
    let structural = if solved.len() == points.len() {
        match structural_checks(phi, spec, cf, config, form, &solved) {
            Ok(s) => Some(s),
            Err(Error::NonConvergence { .. } | Error::ApproximantOverflow { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let aggregate = Aggregate {
        points: points.len(),
        pass_count: points.iter().filter(|p| p.pass()).count(),
        failed_points: points.len() - solved.len(),
        worst_slack: solved
            .iter()
            .map(|p| p.bound - p.measured)
            .fold(f64::INFINITY, f64::min),
        uniqueness_pass_count: solved.iter().filter(|p| p.uniqueness.pass).count(),
        structural_checks: structural,
    };
    Ok(StabilityReport {
        branch: config.branch,
        regime,
        form,
        points,
        aggregate,
    })
}

/// 0 when every point passes and every structural check holds, 1 otherwise.
pub fn report_exit_code(report: &StabilityReport) -> i32 {
    let structural_ok = report
        .aggregate
        .structural_checks
        .as_ref()
        .is_some_and(|s| {
            s.additive_first.passed
                && s.quadratic_second.passed
                && s.forced_zero.as_ref().is_none_or(|f| f.passed)
        });
    let unique = report.aggregate.uniqueness_pass_count == report.aggregate.points;
    if report.all_pass() && structural_ok && unique {
        0
    } else {
        1
    }
}
