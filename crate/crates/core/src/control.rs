//! Control functions `α` and the four bound series built from them.
//!
//! The scale-up series weight `α(2ʲ⁻¹x, 2ʲ⁻¹y)` by `2⁻ʲ` and `4⁻ʲ`; the
//! scale-down series weight `α(x/2ʲ, y/2ʲ)` by `(τ²/2)ʲ` and `(τ³/2)ʲ`. For the
//! constant and power variants every series is geometric with a ratio known
//! in closed form, which gives an exact tail bound for any truncation.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::dyadic::DyadicVector;
use crate::error::{Error, Result};

const MAX_TERMS: u64 = 1_000_000;

/// `α(x, y)` values for finitely many point pairs.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    entries: HashMap<(DyadicVector, DyadicVector), f64>,
    zero_extend: bool,
}

impl AlphaTable {
    pub fn new(
        rows: impl IntoIterator<Item = (DyadicVector, DyadicVector, f64)>,
        zero_extend: bool,
    ) -> Result<Self> {
        let mut entries = HashMap::new();
        for (x, y, v) in rows {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parse(format!(
                    "control table value must be finite and ≥ 0, got {v}"
                )));
            }
            entries.insert((x, y), v);
        }
        Ok(AlphaTable {
            entries,
            zero_extend,
        })
    }

    /// Rows `x ; y ; value`, points in the `n/2^e` syntax; `#` comments.
    pub fn parse(text: &str, zero_extend: bool) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(';').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "control table line {}: expected `x ; y ; value`",
                    lineno + 1
                )));
            }
            let value: f64 = fields[2].parse().map_err(|_| {
                Error::Parse(format!("control table line {}: bad value", lineno + 1))
            })?;
            rows.push((fields[0].parse()?, fields[1].parse()?, value));
        }
        Self::new(rows, zero_extend)
    }

    pub fn load(path: &Path, zero_extend: bool) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, zero_extend)
    }

    pub fn zero_extend(&self) -> bool {
        self.zero_extend
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, x: &DyadicVector, y: &DyadicVector) -> Result<f64> {
        match self.entries.get(&(x.clone(), y.clone())) {
            Some(&v) => Ok(v),
            None if self.zero_extend => Ok(0.0),
            None => Err(Error::TableMiss),
        }
    }

    /// Entries `(k, value)` with `(a, b) = 2ᵏ(x, y)`; `(x, y) ≠ (0, 0)`.
    fn scaled_matches(&self, x: &DyadicVector, y: &DyadicVector) -> Result<Vec<(i64, f64)>> {
        let pair = x.concat(y)?;
        let mut out = Vec::new();
        for ((a, b), &v) in &self.entries {
            if a.dim() != x.dim() || b.dim() != y.dim() {
                continue;
            }
            let other = a.concat(b)?;
            if !other.is_zero() && other.numerators() == pair.numerators() {
                out.push((other.exponent() - pair.exponent(), v));
            }
        }
        out.sort_by_key(|l| l.0);
        Ok(out)
    }
}

/// The control function bounding the equation residual.
#[derive(Debug, Clone)]
pub enum ControlFunction {
    /// `α ≡ ε`.
    Constant {
        epsilon: f64,
    },
    /// `α(x, y) = √θ (‖x‖ʳ + ‖y‖ʳ)`.
    Power {
        theta: f64,
        r: f64,
    },
    Tabled(AlphaTable),
}

impl ControlFunction {
    pub fn constant(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Precondition(format!("ε must be > 0, got {epsilon}")));
        }
        Ok(ControlFunction::Constant { epsilon })
    }

    pub fn power(theta: f64, r: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0 && r.is_finite() && r > 0.0) {
            return Err(Error::Precondition(format!(
                "power control needs θ > 0 and r > 0, got θ={theta}, r={r}"
            )));
        }
        Ok(ControlFunction::Power { theta, r })
    }

    /// Ratio of consecutive terms of `kind`; `None` for tabled controls.
    pub fn ratio(&self, kind: SeriesKind) -> Option<f64> {
        let w = kind.log2_weight();
        match self {
            ControlFunction::Constant { .. } => Some(w.exp2()),
            ControlFunction::Power { r, .. } => Some((w + kind.direction() * r).exp2()),
            ControlFunction::Tabled(_) => None,
        }
    }

    /// For the scale-down series, whether `τⁿα(x/2ⁿ, y/2ⁿ) → 0` (φ-type) or
    /// `τ²ⁿα(x/2ⁿ, y/2ⁿ) → 0` (ψ-type) for every point.
    pub fn limit_condition(&self, kind: SeriesKind) -> Option<bool> {
        let log2_tau = match kind {
            SeriesKind::PhiDown { tau } => tau.log2(),
            SeriesKind::PsiDown { tau } => 2.0 * tau.log2(),
            _ => return None,
        };
        Some(match self {
            ControlFunction::Constant { .. } => false,
            ControlFunction::Power { r, .. } => *r > log2_tau,
            ControlFunction::Tabled(t) => {
                // only a nonzero α(0, 0) survives arbitrarily many halvings
                let zeros: Vec<_> = t
                    .entries
                    .iter()
                    .filter(|((a, b), v)| a.is_zero() && b.is_zero() && **v > 0.0)
                    .collect();
                zeros.is_empty()
            }
        })
    }
}

/// `α(x, y)`.
pub fn alpha_eval(cf: &ControlFunction, x: &DyadicVector, y: &DyadicVector) -> Result<f64> {
    match cf {
        ControlFunction::Constant { epsilon } => Ok(*epsilon),
        ControlFunction::Power { theta, r } => {
            let nx = x.euclidean_norm()?;
            let ny = y.euclidean_norm()?;
            Ok(theta.sqrt() * (nx.powf(*r) + ny.powf(*r)))
        }
        ControlFunction::Tabled(t) => t.lookup(x, y),
    }
}

/// Which of the four series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "series", rename_all = "snake_case")]
pub enum SeriesKind {
    /// `Σ 2⁻ʲ α(2ʲ⁻¹x, 2ʲ⁻¹y)`
    PhiUp,
    /// `Σ 4⁻ʲ α(2ʲ⁻¹x, 2ʲ⁻¹y)`
    PsiUp,
    /// `Σ (τ²/2)ʲ α(x/2ʲ, y/2ʲ)`
    PhiDown { tau: f64 },
    /// `Σ (τ³/2)ʲ α(x/2ʲ, y/2ʲ)`
    PsiDown { tau: f64 },
}

impl SeriesKind {
    fn log2_weight(&self) -> f64 {
        match self {
            SeriesKind::PhiUp => -1.0,
            SeriesKind::PsiUp => -2.0,
            SeriesKind::PhiDown { tau } => 2.0 * tau.log2() - 1.0,
            SeriesKind::PsiDown { tau } => 3.0 * tau.log2() - 1.0,
        }
    }

    /// +1 when the argument doubles from term to term, −1 when it halves.
    fn direction(&self) -> f64 {
        match self {
            SeriesKind::PhiUp | SeriesKind::PsiUp => 1.0,
            _ => -1.0,
        }
    }

    /// Power-of-two applied to the arguments in term `j ≥ 1`.
    fn shift(&self, j: u64) -> i64 {
        match self {
            SeriesKind::PhiUp | SeriesKind::PsiUp => j as i64 - 1,
            _ => -(j as i64),
        }
    }

    /// Term index for an argument shift `k`, if any.
    fn index_of_shift(&self, k: i64) -> Option<u64> {
        let j = match self {
            SeriesKind::PhiUp | SeriesKind::PsiUp => k + 1,
            _ => -k,
        };
        (j >= 1).then_some(j as u64)
    }

    fn validate(&self) -> Result<()> {
        match self {
            SeriesKind::PhiDown { tau } | SeriesKind::PsiDown { tau }
                if tau.is_nan() || *tau < 2.0 =>
            {
                Err(Error::Precondition(format!(
                    "scale-down series need τ ≥ 2, got {tau}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A truncated series with a certified bracket `[value, value + tail_bound]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: u64,
    pub tail_bound: f64,
    pub converged: bool,
    /// Term ratio when known in closed form.
    pub ratio: Option<f64>,
    /// Scale-down only: the accompanying limit condition.
    pub limit_condition: Option<bool>,
    pub diagnostic: Option<String>,
}

impl SeriesResult {
    fn divergent(ratio: Option<f64>, limit_condition: Option<bool>, why: String) -> Self {
        SeriesResult {
            value: f64::INFINITY,
            terms_used: 0,
            tail_bound: f64::INFINITY,
            converged: false,
            ratio,
            limit_condition,
            diagnostic: Some(why),
        }
    }

    /// Converged and, for scale-down series, the limit condition holds.
    pub fn usable(&self) -> bool {
        self.converged && self.limit_condition != Some(false)
    }
}

/// Term generator for one `(kind, cf, x, y)`.
enum Terms<'a> {
    /// `tⱼ = exp2(j·log2_w + shift(j)·r) · base`
    Geometric {
        kind: SeriesKind,
        base: f64,
        r: f64,
        ratio: f64,
    },
    /// Finitely many nonzero terms, sorted by index.
    Sparse(Vec<(u64, f64)>),
    NotZeroExtended(&'a AlphaTable),
}

impl<'a> Terms<'a> {
    fn new(
        kind: SeriesKind,
        cf: &'a ControlFunction,
        x: &DyadicVector,
        y: &DyadicVector,
    ) -> Result<Self> {
        kind.validate()?;
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                found: y.dim(),
            });
        }
        let geometric = |base: f64, r: f64| {
            let ratio = (kind.log2_weight() + kind.direction() * r).exp2();
            Terms::Geometric {
                kind,
                base,
                r,
                ratio,
            }
        };
        Ok(match cf {
            ControlFunction::Constant { epsilon } => geometric(*epsilon, 0.0),
            ControlFunction::Power { r, .. } => geometric(alpha_eval(cf, x, y)?, *r),
            ControlFunction::Tabled(t) => {
                if !t.zero_extend {
                    Terms::NotZeroExtended(t)
                } else if x.is_zero() && y.is_zero() {
                    geometric(t.lookup(x, y)?, 0.0)
                } else {
                    let w = kind.log2_weight();
                    let terms = t
                        .scaled_matches(x, y)?
                        .into_iter()
                        .filter_map(|(k, v)| kind.index_of_shift(k).map(|j| (j, v)))
                        .filter(|&(_, v)| v > 0.0)
                        .map(|(j, v)| (j, (j as f64 * w).exp2() * v))
                        .collect();
                    Terms::Sparse(terms)
                }
            }
        })
    }

    fn term(&self, j: u64) -> f64 {
        match self {
            Terms::Geometric { kind, base, r, .. } => {
                if *base == 0.0 {
                    0.0
                } else {
                    (j as f64 * kind.log2_weight() + kind.shift(j) as f64 * r).exp2() * base
                }
            }
            Terms::Sparse(terms) => terms
                .iter()
                .find(|(i, _)| *i == j)
                .map(|(_, t)| *t)
                .unwrap_or(0.0),
            Terms::NotZeroExtended(_) => f64::NAN,
        }
    }

    /// `Σ_{j>m} tⱼ` (upper bound including rounding slack).
    fn remainder(&self, m: u64) -> f64 {
        match self {
            Terms::Geometric { base, ratio, .. } => {
                if *base == 0.0 {
                    0.0
                } else if *ratio >= 1.0 {
                    f64::INFINITY
                } else {
                    self.term(m + 1) / (1.0 - ratio) * (1.0 + 1e-12)
                }
            }
            Terms::Sparse(terms) => {
                let s: f64 = terms.iter().filter(|(j, _)| *j > m).map(|(_, t)| t).sum();
                s * (1.0 + 1e-12)
            }
            Terms::NotZeroExtended(_) => f64::INFINITY,
        }
    }
}

fn rounding_slack(terms: u64, sum: f64) -> f64 {
    (terms as f64 + 8.0) * f64::EPSILON * sum
}

/// Sums `kind` until the certified tail bound drops to `tol` relative to the
/// partial sum.
pub fn series(
    kind: SeriesKind,
    cf: &ControlFunction,
    x: &DyadicVector,
    y: &DyadicVector,
    tol: f64,
) -> Result<SeriesResult> {
    let terms = Terms::new(kind, cf, x, y)?;
    let limit_condition = cf.limit_condition(kind);
    match &terms {
        Terms::NotZeroExtended(_) => Ok(SeriesResult {
            value: f64::NAN,
            terms_used: 0,
            tail_bound: f64::INFINITY,
            converged: false,
            ratio: None,
            limit_condition,
            diagnostic: Some("tail not certifiable: control table is not zero-extended".into()),
        }),
        Terms::Sparse(list) => {
            let value: f64 = list.iter().map(|(_, t)| t).sum();
            let n = list.last().map(|(j, _)| *j).unwrap_or(0);
            let err = rounding_slack(list.len() as u64, value);
            Ok(SeriesResult {
                value: (value - err).max(0.0),
                terms_used: n,
                tail_bound: 2.0 * err,
                converged: 2.0 * err <= tol * value,
                ratio: None,
                limit_condition,
                diagnostic: None,
            })
        }
        Terms::Geometric { base, ratio, .. } => {
            let ratio = *ratio;
            if ratio >= 1.0 {
                return Ok(SeriesResult::divergent(
                    Some(ratio),
                    limit_condition,
                    format!("term ratio {ratio} ≥ 1"),
                ));
            }
            if *base == 0.0 {
                return Ok(SeriesResult {
                    value: 0.0,
                    terms_used: 0,
                    tail_bound: 0.0,
                    converged: true,
                    ratio: Some(ratio),
                    limit_condition,
                    diagnostic: None,
                });
            }
            let mut sum = 0.0f64;
            let mut tail = f64::INFINITY;
            let mut used = 0u64;
            let mut diagnostic = None;
            for j in 1..=MAX_TERMS {
                let t = terms.term(j);
                sum += t;
                used = j;
                tail = t * ratio / (1.0 - ratio) * (1.0 + 1e-12);
                let err = rounding_slack(j, sum);
                let target = tol * sum;
                if tail + 2.0 * err <= target {
                    break;
                }
                if 2.0 * err > target {
                    diagnostic = Some(format!(
                        "rounding slack {:.3e} exceeds tol {target:.3e} after {j} terms",
                        2.0 * err
                    ));
                    break;
                }
                if t == 0.0 {
                    // underflowed: every later term is zero as well
                    tail = 0.0;
                    break;
                }
            }
            let err = rounding_slack(used, sum);
            let tail_bound = tail + 2.0 * err;
            let converged = tail_bound <= tol * sum;
            if !converged && diagnostic.is_none() {
                diagnostic = Some(format!("tail above tol after {used} terms"));
            }
            Ok(SeriesResult {
                value: (sum - err).max(0.0),
                terms_used: used,
                tail_bound,
                converged,
                ratio: Some(ratio),
                limit_condition,
                diagnostic,
            })
        }
    }
}

pub fn series_phi_up(
    cf: &ControlFunction,
    x: &DyadicVector,
    y: &DyadicVector,
    tol: f64,
) -> Result<SeriesResult> {
    series(SeriesKind::PhiUp, cf, x, y, tol)
}

pub fn series_psi_up(
    cf: &ControlFunction,
    x: &DyadicVector,
    y: &DyadicVector,
    tol: f64,
) -> Result<SeriesResult> {
    series(SeriesKind::PsiUp, cf, x, y, tol)
}

pub fn series_phi_down(
    cf: &ControlFunction,
    tau: f64,
    x: &DyadicVector,
    y: &DyadicVector,
    tol: f64,
) -> Result<SeriesResult> {
    series(SeriesKind::PhiDown { tau }, cf, x, y, tol)
}

pub fn series_psi_down(
    cf: &ControlFunction,
    tau: f64,
    x: &DyadicVector,
    y: &DyadicVector,
    tol: f64,
) -> Result<SeriesResult> {
    series(SeriesKind::PsiDown { tau }, cf, x, y, tol)
}

/// `Σ_{j=m+1}^{n} tⱼ` of `kind`.
pub fn series_partial(
    kind: SeriesKind,
    cf: &ControlFunction,
    x: &DyadicVector,
    y: &DyadicVector,
    m: u64,
    n: u64,
) -> Result<f64> {
    let terms = Terms::new(kind, cf, x, y)?;
    if let Terms::NotZeroExtended(t) = &terms {
        // fall back to direct lookups; misses surface as errors
        let mut s = 0.0;
        for j in m + 1..=n {
            let k = kind.shift(j);
            let xs = x.scale_pow2(k)?;
            let ys = y.scale_pow2(k)?;
            s += (j as f64 * kind.log2_weight()).exp2() * t.lookup(&xs, &ys)?;
        }
        return Ok(s);
    }
    Ok((m + 1..=n).map(|j| terms.term(j)).sum())
}

/// Upper bound on `Σ_{j>m} tⱼ`; infinite for divergent configurations.
pub fn series_remainder(
    kind: SeriesKind,
    cf: &ControlFunction,
    x: &DyadicVector,
    y: &DyadicVector,
    m: u64,
) -> Result<f64> {
    Ok(Terms::new(kind, cf, x, y)?.remainder(m))
}

/// Which stability regime is in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Fatou property, limits through `2ⁿx`.
    ScaleUp,
    /// Δ₂ condition with constant τ, limits through `x/2ⁿ`.
    ScaleDown { tau: f64 },
}

impl Regime {
    pub fn first_series(&self) -> SeriesKind {
        match *self {
            Regime::ScaleUp => SeriesKind::PhiUp,
            Regime::ScaleDown { tau } => SeriesKind::PhiDown { tau },
        }
    }

    pub fn second_series(&self) -> SeriesKind {
        match *self {
            Regime::ScaleUp => SeriesKind::PsiUp,
            Regime::ScaleDown { tau } => SeriesKind::PsiDown { tau },
        }
    }
}

/// The two terms of the stability minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTerm {
    /// Built from the φ-series at `(x, x)` times `α(z, 0)`.
    First,
    /// Built from the ψ-series at `(z, z)` times `α(x, 0)`.
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityBound {
    pub value: f64,
    pub term: BoundTerm,
    pub first: Option<f64>,
    pub second: Option<f64>,
    /// Terms left out because their series diverged.
    pub dropped: Vec<BoundTerm>,
}

/// Minimum over the convergent terms of the regime's bound at `(x, z)`.
pub fn stability_bound(
    regime: Regime,
    cf: &ControlFunction,
    x: &DyadicVector,
    z: &DyadicVector,
    tol: f64,
) -> Result<StabilityBound> {
    let zx = DyadicVector::zeros(x.dim());
    let zz = DyadicVector::zeros(z.dim());
    let phi = series(regime.first_series(), cf, x, x, tol)?;
    let psi = series(regime.second_series(), cf, z, z, tol)?;
    let (c1, c2) = match regime {
        Regime::ScaleUp => (1.0, 1.0),
        Regime::ScaleDown { tau } => (0.5, 1.0 / (2.0 * tau)),
    };
    let first = if phi.usable() {
        Some(c1 * phi.value * alpha_eval(cf, z, &zz)?)
    } else {
        None
    };
    let second = if psi.usable() {
        Some(c2 * alpha_eval(cf, x, &zx)? * psi.value)
    } else {
        None
    };
    let mut dropped = Vec::new();
    if first.is_none() {
        dropped.push(BoundTerm::First);
    }
    if second.is_none() {
        dropped.push(BoundTerm::Second);
    }
    let (value, term) = match (first, second) {
        (Some(a), Some(b)) if b < a => (b, BoundTerm::Second),
        (Some(a), _) => (a, BoundTerm::First),
        (None, Some(b)) => (b, BoundTerm::Second),
        (None, None) => {
            return Err(Error::Divergent(format!(
                "both bound series diverge ({}; {})",
                phi.diagnostic
                    .unwrap_or_else(|| "limit condition fails".into()),
                psi.diagnostic
                    .unwrap_or_else(|| "limit condition fails".into()),
            )))
        }
    };
    Ok(StabilityBound {
        value,
        term,
        first,
        second,
        dropped,
    })
}

/// Closed forms for the power control: `2θ‖x‖ʳ‖z‖ʳ/(4 − 2ʳ)` when scaling up
/// (`0 < r < 1`) and `θτ²‖x‖ʳ‖z‖ʳ/(2ʳ⁺¹ − τ²)` when scaling down
/// (`r > log₂(τ²/2)`).
pub fn closed_form_power_bound(
    regime: Regime,
    theta: f64,
    r: f64,
    norm_x: f64,
    norm_z: f64,
) -> Result<f64> {
    let prod = norm_x.powf(r) * norm_z.powf(r);
    match regime {
        Regime::ScaleUp => {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Precondition(format!(
                    "scale-up closed form needs 0 < r < 1, got {r}"
                )));
            }
            Ok(2.0 * theta * prod / (4.0 - r.exp2()))
        }
        Regime::ScaleDown { tau } => {
            let floor = (tau * tau / 2.0).log2();
            if r.is_nan() || r <= floor {
                return Err(Error::Precondition(format!(
                    "scale-down closed form needs r > log₂(τ²/2) = {floor}, got {r}"
                )));
            }
            Ok(theta * tau * tau * prod / ((r + 1.0).exp2() - tau * tau))
        }
    }
}
