//! Concrete modulars on a finite-dimensional real value space.
//!
//! Two families are supported: power modulars `ρ(u) = Σ|uᵢ|ᵖ` and Orlicz
//! modulars `ρ(u) = Σ young(|uᵢ|)` with a piecewise-linear convex Young
//! function. Both are sums of even, increasing coordinate functions, which the
//! perturbation generator relies on when it maps a ρ-level to a coordinate
//! radius.

use std::fmt;
use std::ops::{Add, Index, Sub};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Run-wide tolerance for exactness claims.
pub const EXACT_TOL: f64 = 1e-12;
/// Run-wide tolerance for convergence claims.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// An element of the value space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn new(coords: Vec<f64>) -> Self {
        ValueVector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        ValueVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn scale(&self, factor: f64) -> Self {
        ValueVector(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// `Σ cᵢ·vᵢ` over equal-dimension vectors.
    pub fn linear_combination(terms: &[(f64, &ValueVector)]) -> Result<ValueVector> {
        let dim = terms.first().map(|(_, v)| v.dim()).unwrap_or(0);
        let mut out = vec![0.0; dim];
        for (c, v) in terms {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            for (o, x) in out.iter_mut().zip(&v.0) {
                *o += c * x;
            }
        }
        Ok(ValueVector(out))
    }
}

impl Index<usize> for ValueVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &ValueVector {
    type Output = ValueVector;
    fn add(self, rhs: &ValueVector) -> ValueVector {
        assert_eq!(self.dim(), rhs.dim(), "value dimension mismatch");
        ValueVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &ValueVector {
    type Output = ValueVector;
    fn sub(self, rhs: &ValueVector) -> ValueVector {
        assert_eq!(self.dim(), rhs.dim(), "value dimension mismatch");
        ValueVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(v: Vec<f64>) -> Self {
        ValueVector(v)
    }
}

/// A convex, increasing, piecewise-linear Young function given by knots.
///
/// Beyond the last knot the last segment is extended linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungTable {
    knots: Vec<(f64, f64)>,
}

impl YoungTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::OrliczTable("need at least two knots".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::OrliczTable(
                "table must start at t = 0 with young(0) = 0".into(),
            ));
        }
        let mut last_slope = 0.0f64;
        for (i, w) in knots.windows(2).enumerate() {
            let ((t0, y0), (t1, y1)) = (w[0], w[1]);
            if !(t1.is_finite() && y1.is_finite()) {
                return Err(Error::OrliczTable(format!("non-finite knot {}", i + 1)));
            }
            if t1 <= t0 {
                return Err(Error::OrliczTable(format!(
                    "t must be strictly increasing (knot {})",
                    i + 1
                )));
            }
            if y1 <= y0 {
                return Err(Error::OrliczTable(format!(
                    "young must be strictly increasing (knot {})",
                    i + 1
                )));
            }
            let slope = (y1 - y0) / (t1 - t0);
            if slope < last_slope * (1.0 - EXACT_TOL) {
                return Err(Error::OrliczTable(format!(
                    "young is not convex: slope drops from {last_slope} to {slope} at knot {}",
                    i + 1
                )));
            }
            last_slope = slope;
        }
        Ok(YoungTable { knots })
    }

    /// Two-column text, `t young(t)` per line; `#` starts a comment, commas
    /// are accepted as separators.
    pub fn parse(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 2 {
                return Err(Error::OrliczTable(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::OrliczTable(format!("line {}: bad number {s:?}", lineno + 1))
                })
            };
            knots.push((parse(fields[0])?, parse(fields[1])?));
        }
        Self::new(knots)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn segment(&self, t: f64) -> usize {
        // index i such that knot i ≤ t < knot i+1, clamped to the last segment
        let pos = self.knots.partition_point(|&(k, _)| k <= t);
        pos.saturating_sub(1).min(self.knots.len() - 2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        let i = self.segment(t);
        let (t0, y0) = self.knots[i];
        let (t1, y1) = self.knots[i + 1];
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    /// The `t ≥ 0` with `young(t) = level`.
    pub fn inverse(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let pos = self.knots.partition_point(|&(_, y)| y <= level);
        let i = pos.saturating_sub(1).min(self.knots.len() - 2);
        let (t0, y0) = self.knots[i];
        let (t1, y1) = self.knots[i + 1];
        t0 + (level - y0) * (t1 - t0) / (y1 - y0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModularKind {
    Power { p: f64 },
    Orlicz { young: YoungTable },
}

/// A concrete modular together with the flags the solver consults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularSpec {
    pub kind: ModularKind,
    pub dimension: usize,
    pub convex: bool,
    pub fatou: bool,
    pub delta2_tau: Option<f64>,
}

impl ModularSpec {
    /// `ρ(u) = Σ|uᵢ|ᵖ`. Any `p > 0` is accepted so that non-convex candidates
    /// (`p < 1`) can be examined; only `p ≥ 1` is flagged convex.
    pub fn power(p: f64, dimension: usize) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidModular(format!(
                "power exponent must be > 0, got {p}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidModular("dimension must be ≥ 1".into()));
        }
        Ok(ModularSpec {
            kind: ModularKind::Power { p },
            dimension,
            convex: p >= 1.0,
            fatou: true,
            delta2_tau: Some(2f64.powf(p)),
        })
    }

    /// Orlicz modular from a validated convex table. The Δ₂ constant is left
    /// unset; supply one with [`ModularSpec::with_delta2_tau`] or estimate it
    /// with [`delta2_tau`].
    pub fn orlicz(young: YoungTable, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidModular("dimension must be ≥ 1".into()));
        }
        Ok(ModularSpec {
            kind: ModularKind::Orlicz { young },
            dimension,
            convex: true,
            fatou: true,
            delta2_tau: None,
        })
    }

    pub fn with_delta2_tau(mut self, tau: f64) -> Result<Self> {
        if self.convex && tau < 2.0 {
            return Err(Error::Delta2(format!(
                "a convex modular needs τ ≥ 2, got {tau}"
            )));
        }
        self.delta2_tau = Some(tau);
        Ok(self)
    }

    fn coordinate(&self, t: f64) -> f64 {
        match &self.kind {
            ModularKind::Power { p } => t.abs().powf(*p),
            ModularKind::Orlicz { young } => young.eval(t),
        }
    }

    /// Largest `s` with `ρ(s·(1,…,1)) ≤ level`. Every vector whose coordinates
    /// are bounded by `s` in magnitude has modular at most `level`.
    pub fn coordinate_radius(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let per = level / self.dimension as f64;
        match &self.kind {
            ModularKind::Power { p } => per.powf(1.0 / p),
            ModularKind::Orlicz { young } => young.inverse(per),
        }
    }
}

impl fmt::Display for ModularSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModularKind::Power { p } => write!(f, "power modular p={p} on R^{}", self.dimension),
            ModularKind::Orlicz { young } => write!(
                f,
                "Orlicz modular ({} knots) on R^{}",
                young.knots().len(),
                self.dimension
            ),
        }
    }
}

fn check_dim(spec: &ModularSpec, u: &ValueVector) -> Result<()> {
    if u.dim() != spec.dimension {
        Err(Error::DimensionMismatch {
            expected: spec.dimension,
            found: u.dim(),
        })
    } else {
        Ok(())
    }
}

/// `ρ(u)`.
pub fn eval_modular(spec: &ModularSpec, u: &ValueVector) -> Result<f64> {
    check_dim(spec, u)?;
    Ok(u.coords().iter().map(|&c| spec.coordinate(c)).sum())
}

/// Only called with vectors already known to match the spec.
pub(crate) fn rho(spec: &ModularSpec, u: &ValueVector) -> f64 {
    debug_assert_eq!(u.dim(), spec.dimension);
    u.coords().iter().map(|&c| spec.coordinate(c)).sum()
}

/// A sample that violated an axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomWitness {
    pub u: ValueVector,
    pub v: Option<ValueVector>,
    pub lambda: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomOutcome {
    pub checked: usize,
    pub passed: bool,
    pub witness: Option<AxiomWitness>,
}

impl AxiomOutcome {
    fn new() -> Self {
        AxiomOutcome {
            checked: 0,
            passed: true,
            witness: None,
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> AxiomWitness) {
        self.checked += 1;
        if !ok && self.passed {
            self.passed = false;
            self.witness = Some(witness());
        }
    }
}

/// Per-axiom verdicts over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    /// `ρ(u) = 0 ⇔ u = 0`.
    pub definiteness: AxiomOutcome,
    /// `ρ(−u) = ρ(u)`.
    pub symmetry: AxiomOutcome,
    /// `ρ(λu + (1−λ)v) ≤ ρ(u) + ρ(v)`.
    pub modular_inequality: AxiomOutcome,
    /// `ρ(λu + (1−λ)v) ≤ λρ(u) + (1−λ)ρ(v)`.
    pub convexity: AxiomOutcome,
    /// `ρ(2u) ≤ τρ(u)`; only checked when the spec declares τ.
    pub delta2: Option<AxiomOutcome>,
}

impl AxiomReport {
    /// True when every modular axiom holds and, if the spec claims
    /// convexity or Δ₂, those hold as well.
    pub fn consistent_with(&self, spec: &ModularSpec) -> bool {
        self.definiteness.passed
            && self.symmetry.passed
            && self.modular_inequality.passed
            && (!spec.convex || self.convexity.passed)
            && self.delta2.as_ref().is_none_or(|d| d.passed)
    }

    pub fn all_pass(&self) -> bool {
        self.definiteness.passed
            && self.symmetry.passed
            && self.modular_inequality.passed
            && self.convexity.passed
            && self.delta2.as_ref().is_none_or(|d| d.passed)
    }
}

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + EXACT_TOL * (1.0 + rhs.abs())
}

/// Checks the modular axioms against `(u, v, λ)` samples, `λ ∈ [0, 1]`.
pub fn check_axioms(
    spec: &ModularSpec,
    samples: &[(ValueVector, ValueVector, f64)],
) -> Result<AxiomReport> {
    if samples.is_empty() {
        return Err(Error::Precondition(
            "axiom samples must be non-empty".into(),
        ));
    }
    let mut def = AxiomOutcome::new();
    let mut sym = AxiomOutcome::new();
    let mut modi = AxiomOutcome::new();
    let mut conv = AxiomOutcome::new();
    let mut d2 = spec.delta2_tau.map(|_| AxiomOutcome::new());

    let zero = ValueVector::zeros(spec.dimension);
    let r0 = eval_modular(spec, &zero)?;
    def.record(r0 == 0.0, || AxiomWitness {
        u: zero.clone(),
        v: None,
        lambda: None,
        lhs: r0,
        rhs: 0.0,
    });

    for (u, v, lambda) in samples {
        let lambda = *lambda;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Precondition(format!(
                "λ must lie in [0, 1], got {lambda}"
            )));
        }
        let ru = eval_modular(spec, u)?;
        let rv = eval_modular(spec, v)?;

        let nonzero = u.max_abs() > EXACT_TOL;
        def.record(!nonzero || ru > 0.0, || AxiomWitness {
            u: u.clone(),
            v: None,
            lambda: None,
            lhs: ru,
            rhs: 0.0,
        });

        let rneg = rho(spec, &u.scale(-1.0));
        sym.record((rneg - ru).abs() <= EXACT_TOL * (1.0 + ru), || {
            AxiomWitness {
                u: u.clone(),
                v: None,
                lambda: Some(-1.0),
                lhs: rneg,
                rhs: ru,
            }
        });

        let mix = ValueVector::linear_combination(&[(lambda, u), (1.0 - lambda, v)])?;
        let rmix = rho(spec, &mix);
        modi.record(leq(rmix, ru + rv), || AxiomWitness {
            u: u.clone(),
            v: Some(v.clone()),
            lambda: Some(lambda),
            lhs: rmix,
            rhs: ru + rv,
        });
        let convex_rhs = lambda * ru + (1.0 - lambda) * rv;
        conv.record(leq(rmix, convex_rhs), || AxiomWitness {
            u: u.clone(),
            v: Some(v.clone()),
            lambda: Some(lambda),
            lhs: rmix,
            rhs: convex_rhs,
        });

        if let (Some(out), Some(tau)) = (d2.as_mut(), spec.delta2_tau) {
            let r2 = rho(spec, &u.scale(2.0));
            out.record(leq(r2, tau * ru), || AxiomWitness {
                u: u.clone(),
                v: None,
                lambda: Some(2.0),
                lhs: r2,
                rhs: tau * ru,
            });
        }
    }

    Ok(AxiomReport {
        definiteness: def,
        symmetry: sym,
        modular_inequality: modi,
        convexity: conv,
        delta2: d2,
    })
}

/// A Δ₂ constant and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delta2Constant {
    pub tau: f64,
    /// `None` when exact; otherwise the number of samples with `ρ(u) > 0`.
    pub samples: Option<usize>,
}

/// The Δ₂ constant: exact `2ᵖ` for power modulars, otherwise the supremum of
/// `ρ(2u)/ρ(u)` over the samples with `ρ(u) > 0`.
pub fn delta2_tau(spec: &ModularSpec, samples: Option<&[ValueVector]>) -> Result<Delta2Constant> {
    let out = match &spec.kind {
        ModularKind::Power { p } => Delta2Constant {
            tau: 2f64.powf(*p),
            samples: None,
        },
        ModularKind::Orlicz { .. } => {
            let samples = samples
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Delta2("Orlicz Δ₂ estimation needs samples".into()))?;
            let mut sup = f64::NEG_INFINITY;
            let mut used = 0usize;
            for u in samples {
                let r = eval_modular(spec, u)?;
                if r > 0.0 {
                    used += 1;
                    sup = sup.max(rho(spec, &u.scale(2.0)) / r);
                }
            }
            if used == 0 {
                return Err(Error::Delta2("every sample has ρ(u) = 0".into()));
            }
            Delta2Constant {
                tau: sup,
                samples: Some(used),
            }
        }
    };
    if spec.convex && out.tau < 2.0 - 1e-9 {
        return Err(Error::Delta2(format!(
            "convex modular produced τ = {} < 2",
            out.tau
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub converged: bool,
    /// Largest `ρ(tailₖ − limit)` at or beyond the burn-in index.
    pub max_residual: f64,
    /// Index attaining `max_residual`.
    pub worst_index: usize,
    pub residuals: Vec<f64>,
}

/// ρ-convergence of `tail` to `limit`: every residual from `burn_in` on is at
/// most `tol`, and consecutive residuals never grow by more than a factor 2.
pub fn check_rho_convergence(
    spec: &ModularSpec,
    tail: &[ValueVector],
    limit: &ValueVector,
    tol: f64,
    burn_in: usize,
) -> Result<ConvergenceCheck> {
    if tail.is_empty() {
        return Err(Error::Precondition("tail must be non-empty".into()));
    }
    check_dim(spec, limit)?;
    let residuals = tail
        .iter()
        .map(|u| {
            check_dim(spec, u)?;
            Ok(rho(spec, &(u - limit)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let start = burn_in.min(residuals.len() - 1);
    let (worst_index, max_residual) =
        residuals[start..]
            .iter()
            .enumerate()
            .fold((start, 0.0f64), |(wi, wm), (i, &r)| {
                if r > wm {
                    (start + i, r)
                } else {
                    (wi, wm)
                }
            });
    let bounded = residuals[start..].iter().all(|&r| r <= tol);
    let tame = residuals[start..]
        .windows(2)
        .all(|w| w[1] <= 2.0 * w[0] + f64::MIN_POSITIVE);
    Ok(ConvergenceCheck {
        converged: burn_in < residuals.len() && bounded && tame,
        max_residual,
        worst_index,
        residuals,
    })
}

/// Deterministic `(u, v, λ)` samples for [`check_axioms`], with coordinates
/// spread over magnitudes `2⁻⁸ .. 2⁸` and `λ ∈ [0, 1]`.
pub fn axiom_samples(seed: u64, count: usize, dim: usize) -> Vec<(ValueVector, ValueVector, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let vector = |rng: &mut rand_chacha::ChaCha8Rng| {
        ValueVector::new(
            (0..dim)
                .map(|_| rng.gen_range(-1.0..1.0) * rng.gen_range(-8.0f64..8.0).exp2())
                .collect(),
        )
    };
    (0..count)
        .map(|_| {
            let u = vector(&mut rng);
            let v = vector(&mut rng);
            (u, v, rng.gen_range(0.0..=1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vv(c: &[f64]) -> ValueVector {
        ValueVector::new(c.to_vec())
    }

    #[test]
    fn power_modular_values() {
        let p2 = ModularSpec::power(2.0, 2).unwrap();
        assert_eq!(eval_modular(&p2, &vv(&[3.0, 4.0])).unwrap(), 25.0);
        assert_eq!(eval_modular(&p2, &vv(&[0.0, 0.0])).unwrap(), 0.0);
        let p1 = ModularSpec::power(1.0, 2).unwrap();
        assert_eq!(eval_modular(&p1, &vv(&[3.0, -4.0])).unwrap(), 7.0);
        assert!(matches!(
            eval_modular(&p1, &vv(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn power_flags() {
        let p = ModularSpec::power(3.0, 1).unwrap();
        assert!(p.convex && p.fatou);
        assert_eq!(p.delta2_tau, Some(8.0));
        let half = ModularSpec::power(0.5, 2).unwrap();
        assert!(!half.convex);
        assert!(ModularSpec::power(0.0, 1).is_err());
    }

    #[test]
    fn square_root_candidate_fails_convexity() {
        let half = ModularSpec::power(0.5, 2).unwrap();
        let samples = vec![(vv(&[1.0, 0.0]), vv(&[0.0, 1.0]), 0.5)];
        let report = check_axioms(&half, &samples).unwrap();
        assert!(report.definiteness.passed);
        assert!(report.symmetry.passed);
        assert!(report.modular_inequality.passed);
        assert!(!report.convexity.passed);
        let w = report.convexity.witness.unwrap();
        assert!((w.lhs - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.rhs, 1.0);
    }

    #[test]
    fn sign_flip_symmetry() {
        let p3 = ModularSpec::power(3.0, 2).unwrap();
        let u = vv(&[1.5, -0.25]);
        let report = check_axioms(&p3, &[(u.clone(), u.scale(-1.0), 0.3)]).unwrap();
        assert!(report.all_pass());
        assert_eq!(
            eval_modular(&p3, &u).unwrap(),
            eval_modular(&p3, &u.scale(-1.0)).unwrap()
        );
    }

    #[test]
    fn axiom_samples_required() {
        let p = ModularSpec::power(2.0, 1).unwrap();
        assert!(check_axioms(&p, &[]).is_err());
    }

    #[test]
    fn exact_delta2_for_power() {
        for (p, tau) in [(1.0, 2.0), (2.0, 4.0), (3.0, 8.0)] {
            let spec = ModularSpec::power(p, 1).unwrap();
            let d = delta2_tau(&spec, None).unwrap();
            assert_eq!(d.tau, tau);
            assert_eq!(d.samples, None);
        }
    }

    #[test]
    fn orlicz_table_validation() {
        assert!(YoungTable::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)]).is_err());
        assert!(YoungTable::new(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        assert!(YoungTable::new(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(YoungTable::new(vec![(0.0, 0.0)]).is_err());
        let ok = YoungTable::parse("# t young\n0 0\n0.5, 0.25\n1 1\n2 4\n").unwrap();
        assert_eq!(ok.eval(0.75), 0.625);
        assert_eq!(ok.eval(3.0), 7.0);
        assert_eq!(ok.eval(-1.0), 1.0);
        assert!((ok.inverse(0.625) - 0.75).abs() < 1e-15);
        assert!((ok.inverse(7.0) - 3.0).abs() < 1e-15);
        assert!(YoungTable::parse("0 0\n1\n").is_err());
    }

    #[test]
    fn orlicz_delta2_needs_positive_samples() {
        let young = YoungTable::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        let spec = ModularSpec::orlicz(young, 1).unwrap();
        assert!(delta2_tau(&spec, None).is_err());
        assert!(delta2_tau(&spec, Some(&[vv(&[0.0])])).is_err());
        let d = delta2_tau(&spec, Some(&[vv(&[1.0]), vv(&[0.25])])).unwrap();
        assert_eq!(d.tau, 3.0);
        assert_eq!(d.samples, Some(2));
    }

    #[test]
    fn declared_tau_below_two_is_rejected_for_convex() {
        let spec = ModularSpec::power(1.0, 1).unwrap();
        assert!(spec.with_delta2_tau(1.5).is_err());
    }

    #[test]
    fn convergence_examples() {
        let p2 = ModularSpec::power(2.0, 2).unwrap();
        let u = vv(&[1.0, 2.0]);
        let c = check_rho_convergence(&p2, &vec![u.clone(); 5], &u, 1e-6, 0).unwrap();
        assert!(c.converged);
        assert_eq!(c.max_residual, 0.0);

        let tail: Vec<_> = (0..30).map(|n| vv(&[0.5f64.powi(n), 0.0])).collect();
        let zero = ValueVector::zeros(2);
        assert!(
            check_rho_convergence(&p2, &tail, &zero, 1e-6, 10)
                .unwrap()
                .converged
        );
        assert!(
            !check_rho_convergence(&p2, &tail, &zero, 1e-6, 9)
                .unwrap()
                .converged
        );

        let alt: Vec<_> = (0..10)
            .map(|n| vv(&[if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0]))
            .collect();
        let c = check_rho_convergence(&p2, &alt, &zero, 1e-6, 0).unwrap();
        assert!(!c.converged);
        assert_eq!(c.max_residual, 1.0);

        assert!(check_rho_convergence(&p2, &[], &zero, 1e-6, 0).is_err());
    }

    #[test]
    fn coordinate_radius_bounds_modular() {
        let p = ModularSpec::power(2.0, 3).unwrap();
        let s = p.coordinate_radius(0.75);
        assert!((eval_modular(&p, &vv(&[s, s, s])).unwrap() - 0.75).abs() < 1e-15);
        let young = YoungTable::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        let o = ModularSpec::orlicz(young, 2).unwrap();
        let s = o.coordinate_radius(4.0);
        assert!((eval_modular(&o, &vv(&[s, -s])).unwrap() - 4.0).abs() < 1e-14);
    }
}
