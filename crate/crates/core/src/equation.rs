//! The functional-equation residual, the perturbed map φ, and the structural
//! checks (additive in the first slot, quadratic in the second).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dyadic::{Dyadic, DyadicVector};
use crate::error::{Error, Result};
use crate::modular::ValueVector;
use crate::perturbation::Perturbation;

/// Argument selector for one residual term.
#[derive(Debug, Clone, Copy)]
enum Arg {
    Sum,
    Diff,
    Base,
    Other,
}

/// Which signed combination of φ values defines the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationForm {
    /// `φ(x+y, z+w) + φ(x−y, z−w) − 2φ(x, z) − 2φ(x, w)`
    #[serde(rename = "paper_aq")]
    PaperAQ,
    /// Extension: `Σ± φ(x±y, z±w) − 4φ(x, z) − 4φ(x, w)` over all four sign
    /// pairs. Every tensor map `Σ T xₖ zᵢ zⱼ` solves it exactly.
    #[serde(rename = "symmetrized_aq")]
    SymmetrizedAQ,
}

impl EquationForm {
    /// `(coefficient, first-slot argument, second-slot argument)`; the
    /// second-slot `Base`/`Other` stand for `z`/`w`.
    fn terms(&self) -> &'static [(i64, Arg, Arg)] {
        use Arg::*;
        match self {
            EquationForm::PaperAQ => &[
                (1, Sum, Sum),
                (1, Diff, Diff),
                (-2, Base, Base),
                (-2, Base, Other),
            ],
            EquationForm::SymmetrizedAQ => &[
                (1, Sum, Sum),
                (1, Sum, Diff),
                (1, Diff, Sum),
                (1, Diff, Diff),
                (-4, Base, Base),
                (-4, Base, Other),
            ],
        }
    }

    /// `Σ |coefficient|`.
    pub fn total_weight(&self) -> u32 {
        self.terms()
            .iter()
            .map(|(c, _, _)| c.unsigned_abs() as u32)
            .sum()
    }

    /// Δ₂ doublings needed to absorb the total weight: `⌈log₂ W⌉`.
    pub fn doublings(&self) -> u32 {
        self.total_weight().next_power_of_two().trailing_zeros()
    }

    pub fn is_extension(&self) -> bool {
        matches!(self, EquationForm::SymmetrizedAQ)
    }

    pub fn label(&self) -> &'static str {
        match self {
            EquationForm::PaperAQ => "paper_aq",
            EquationForm::SymmetrizedAQ => "symmetrized_aq (extension)",
        }
    }
}

impl fmt::Display for EquationForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The argument pairs of a residual, with coefficients.
fn residual_points(
    form: EquationForm,
    x: &DyadicVector,
    y: &DyadicVector,
    z: &DyadicVector,
    w: &DyadicVector,
) -> Result<Vec<(i64, DyadicVector, DyadicVector)>> {
    let xs = [x.add(y)?, x.sub(y)?, x.clone()];
    let zs = [z.add(w)?, z.sub(w)?, z.clone(), w.clone()];
    Ok(form
        .terms()
        .iter()
        .map(|&(c, a, b)| {
            let xa = match a {
                Arg::Sum => &xs[0],
                Arg::Diff => &xs[1],
                _ => &xs[2],
            };
            let zb = match b {
                Arg::Sum => &zs[0],
                Arg::Diff => &zs[1],
                Arg::Base => &zs[2],
                Arg::Other => &zs[3],
            };
            (c, xa.clone(), zb.clone())
        })
        .collect())
}

/// A map `X² → Y` evaluated at dyadic points.
pub trait TwoSlotMap: Sync {
    /// `(d_X, d_Y)`.
    fn dims(&self) -> (usize, usize);

    fn eval(&self, x: &DyadicVector, z: &DyadicVector) -> Result<ValueVector>;

    /// The residual of `form` at `(x, y, z, w)`, combined in floating point.
    fn residual(
        &self,
        form: EquationForm,
        x: &DyadicVector,
        y: &DyadicVector,
        z: &DyadicVector,
        w: &DyadicVector,
    ) -> Result<ValueVector> {
        let pts = residual_points(form, x, y, z, w)?;
        let vals = pts
            .iter()
            .map(|(_, a, b)| self.eval(a, b))
            .collect::<Result<Vec<_>>>()?;
        let terms: Vec<(f64, &ValueVector)> = pts
            .iter()
            .zip(&vals)
            .map(|((c, _, _), v)| (*c as f64, v))
            .collect();
        ValueVector::linear_combination(&terms)
    }
}

/// Adapter turning a closure into a [`TwoSlotMap`].
pub struct FnMap<F> {
    dims: (usize, usize),
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&DyadicVector, &DyadicVector) -> Result<ValueVector> + Sync,
{
    pub fn new(dim_x: usize, dim_y: usize, f: F) -> Self {
        FnMap {
            dims: (dim_x, dim_y),
            f,
        }
    }
}

impl<F> TwoSlotMap for FnMap<F>
where
    F: Fn(&DyadicVector, &DyadicVector) -> Result<ValueVector> + Sync,
{
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn eval(&self, x: &DyadicVector, z: &DyadicVector) -> Result<ValueVector> {
        (self.f)(x, z)
    }
}

/// Coefficients of `Σ T[m,k,i,j] xₖ zᵢ zⱼ`, symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorMap {
    dim_x: usize,
    dim_y: usize,
    /// `(m, k, i, j, coefficient)` with nonzero exact coefficients.
    entries: Vec<(usize, usize, usize, usize, f64, Dyadic)>,
}

impl TensorMap {
    /// Builds from `(m, k, i, j, value)` entries; duplicates accumulate and
    /// the result is symmetrized over `(i, j)`.
    pub fn new(
        dim_x: usize,
        dim_y: usize,
        entries: impl IntoIterator<Item = (usize, usize, usize, usize, f64)>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
        for (m, k, i, j, v) in entries {
            if m >= dim_y || k >= dim_x || i >= dim_x || j >= dim_x {
                return Err(Error::Parse(format!(
                    "tensor index ({m},{k},{i},{j}) out of range for d_X={dim_x}, d_Y={dim_y}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Parse("tensor coefficient must be finite".into()));
            }
            *acc.entry((m, k, i, j)).or_insert(0.0) += v;
        }
        let mut sym: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
        for (&(m, k, i, j), &v) in &acc {
            let t = acc.get(&(m, k, j, i)).copied().unwrap_or(0.0);
            sym.insert((m, k, i, j), 0.5 * (v + t));
            sym.entry((m, k, j, i)).or_insert(0.5 * (v + t));
        }
        let entries = sym
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((m, k, i, j), v)| Ok((m, k, i, j, v, Dyadic::from_f64(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorMap {
            dim_x,
            dim_y,
            entries,
        })
    }

    /// One-dimensional `c · x z²`.
    pub fn scalar(c: f64) -> Result<Self> {
        Self::new(1, 1, [(0, 0, 0, 0, c)])
    }

    /// Text rows `k i j value` (output 0) or `m k i j value`; 0-based indices.
    pub fn parse(text: &str, dim_x: usize, dim_y: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let bad = || Error::Parse(format!("tensor line {}: {line:?}", lineno + 1));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let (m, rest) = match f.len() {
                4 => (0, &f[..]),
                5 => (idx(f[0])?, &f[1..]),
                _ => return Err(bad()),
            };
            let v: f64 = rest[3].parse().map_err(|_| bad())?;
            entries.push((m, idx(rest[0])?, idx(rest[1])?, idx(rest[2])?, v));
        }
        Self::new(dim_x, dim_y, entries)
    }

    pub fn load(path: &Path, dim_x: usize, dim_y: usize) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, dim_x, dim_y)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_x, self.dim_y)
    }

    /// Coefficient after symmetrization.
    pub fn coefficient(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| (e.0, e.1, e.2, e.3) == (m, k, i, j))
            .map(|e| e.4)
            .unwrap_or(0.0)
    }

    /// Exact value per output coordinate.
    pub fn eval_exact(&self, x: &DyadicVector, z: &DyadicVector) -> Vec<Dyadic> {
        let mut out = vec![Dyadic::zero(); self.dim_y];
        if x.is_zero() || z.is_zero() {
            return out;
        }
        let xs: Vec<Dyadic> = (0..self.dim_x).map(|k| x.coord(k)).collect();
        let zs: Vec<Dyadic> = (0..self.dim_x).map(|i| z.coord(i)).collect();
        for (m, k, i, j, _, c) in &self.entries {
            let term = c.mul(&xs[*k]).mul(&zs[*i]).mul(&zs[*j]);
            out[*m] = out[*m].add(&term);
        }
        out
    }
}

/// The perturbed map `φ = exact tensor part + seeded perturbation`.
#[derive(Debug, Clone)]
pub struct MapEvaluator {
    dim_x: usize,
    dim_y: usize,
    tensor: Option<TensorMap>,
    perturbation: Option<Perturbation>,
}

impl MapEvaluator {
    pub fn new(
        dim_x: usize,
        dim_y: usize,
        tensor: Option<TensorMap>,
        perturbation: Option<Perturbation>,
    ) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::Config("map dimensions must be ≥ 1".into()));
        }
        if let Some(t) = &tensor {
            if t.dims() != (dim_x, dim_y) {
                return Err(Error::DimensionMismatch {
                    expected: dim_x,
                    found: t.dims().0,
                });
            }
        }
        if let Some(p) = &perturbation {
            if p.dim() != dim_y {
                return Err(Error::DimensionMismatch {
                    expected: dim_y,
                    found: p.dim(),
                });
            }
        }
        Ok(MapEvaluator {
            dim_x,
            dim_y,
            tensor,
            perturbation,
        })
    }

    pub fn zero(dim_x: usize, dim_y: usize) -> Self {
        MapEvaluator {
            dim_x,
            dim_y,
            tensor: None,
            perturbation: None,
        }
    }

    pub fn tensor(&self) -> Option<&TensorMap> {
        self.tensor.as_ref()
    }

    pub fn perturbation(&self) -> Option<&Perturbation> {
        self.perturbation.as_ref()
    }

    fn check(&self, v: &DyadicVector) -> Result<()> {
        if v.dim() != self.dim_x {
            Err(Error::DimensionMismatch {
                expected: self.dim_x,
                found: v.dim(),
            })
        } else {
            Ok(())
        }
    }

    fn round(values: &[Dyadic]) -> Result<Vec<f64>> {
        values.iter().map(Dyadic::to_f64).collect()
    }
}

impl TwoSlotMap for MapEvaluator {
    fn dims(&self) -> (usize, usize) {
        (self.dim_x, self.dim_y)
    }

    fn eval(&self, x: &DyadicVector, z: &DyadicVector) -> Result<ValueVector> {
        self.check(x)?;
        self.check(z)?;
        let mut out = match &self.tensor {
            Some(t) => ValueVector::new(Self::round(&t.eval_exact(x, z))?),
            None => ValueVector::zeros(self.dim_y),
        };
        if let Some(p) = &self.perturbation {
            out = &out + &p.eval(x, z)?;
        }
        Ok(out)
    }

    /// The exact part of the residual is combined without rounding and
    /// rounded once; the perturbation part is combined in floating point.
    fn residual(
        &self,
        form: EquationForm,
        x: &DyadicVector,
        y: &DyadicVector,
        z: &DyadicVector,
        w: &DyadicVector,
    ) -> Result<ValueVector> {
        for v in [x, y, z, w] {
            self.check(v)?;
        }
        let pts = residual_points(form, x, y, z, w)?;
        let mut out = ValueVector::zeros(self.dim_y);
        if let Some(t) = &self.tensor {
            let mut acc = vec![Dyadic::zero(); self.dim_y];
            for (c, a, b) in &pts {
                for (slot, v) in acc.iter_mut().zip(t.eval_exact(a, b)) {
                    *slot = slot.add(&v.mul_int(*c));
                }
            }
            out = ValueVector::new(Self::round(&acc)?);
        }
        if let Some(p) = &self.perturbation {
            let vals = pts
                .iter()
                .map(|(_, a, b)| p.eval(a, b))
                .collect::<Result<Vec<_>>>()?;
            let terms: Vec<(f64, &ValueVector)> = pts
                .iter()
                .zip(&vals)
                .map(|((c, _, _), v)| (*c as f64, v))
                .collect();
            out = &out + &ValueVector::linear_combination(&terms)?;
        }
        Ok(out)
    }
}

/// `φ`'s residual under `form`.
pub fn residual(
    form: EquationForm,
    phi: &dyn TwoSlotMap,
    x: &DyadicVector,
    y: &DyadicVector,
    z: &DyadicVector,
    w: &DyadicVector,
) -> Result<ValueVector> {
    phi.residual(form, x, y, z, w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralWitness {
    pub points: Vec<DyadicVector>,
    pub lhs: ValueVector,
    pub rhs: ValueVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralCheck {
    pub passed: bool,
    pub checked: usize,
    /// Largest coordinatewise defect seen.
    pub worst: f64,
    pub tol: f64,
    pub witness: Option<StructuralWitness>,
}

fn structural(
    items: impl Iterator<Item = Result<(Vec<DyadicVector>, ValueVector, ValueVector)>>,
    tol: f64,
) -> Result<StructuralCheck> {
    let mut out = StructuralCheck {
        passed: true,
        checked: 0,
        worst: 0.0,
        tol,
        witness: None,
    };
    for item in items {
        let (points, lhs, rhs) = item?;
        let defect = (&lhs - &rhs).max_abs();
        out.checked += 1;
        out.worst = out.worst.max(defect);
        if (defect.is_nan() || defect > tol) && out.passed {
            out.passed = false;
            out.witness = Some(StructuralWitness { points, lhs, rhs });
        }
    }
    if out.checked == 0 {
        return Err(Error::Precondition("structural checks need samples".into()));
    }
    Ok(out)
}

/// `H(x+x′, z) = H(x, z) + H(x′, z)` coordinatewise within `tol`.
pub fn check_additive_first(
    h: &dyn TwoSlotMap,
    pairs: &[(DyadicVector, DyadicVector, DyadicVector)],
    tol: f64,
) -> Result<StructuralCheck> {
    structural(
        pairs.iter().map(|(x, xp, z)| {
            let lhs = h.eval(&x.add(xp)?, z)?;
            let rhs = &h.eval(x, z)? + &h.eval(xp, z)?;
            Ok((vec![x.clone(), xp.clone(), z.clone()], lhs, rhs))
        }),
        tol,
    )
}

/// `H(x, z+w) + H(x, z−w) = 2H(x, z) + 2H(x, w)` coordinatewise within `tol`.
pub fn check_quadratic_second(
    h: &dyn TwoSlotMap,
    triples: &[(DyadicVector, DyadicVector, DyadicVector)],
    tol: f64,
) -> Result<StructuralCheck> {
    structural(
        triples.iter().map(|(x, z, w)| {
            let lhs = &h.eval(x, &z.add(w)?)? + &h.eval(x, &z.sub(w)?)?;
            let rhs =
                ValueVector::linear_combination(&[(2.0, &h.eval(x, z)?), (2.0, &h.eval(x, w)?)])?;
            Ok((vec![x.clone(), z.clone(), w.clone()], lhs, rhs))
        }),
        tol,
    )
}

/// Diagnostic for the forced-zero consequence of the `paper_aq` form with a zero
/// boundary: substituting `y = x, w = 0` gives `φ(2x, z) = 2φ(x, z)`,
/// substituting `y = 0, w = z` gives `φ(x, 2z) = 4φ(x, z)`, and additivity of
/// `φ(x, ·)` then forces `2φ = 4φ`, i.e. `φ ≡ 0` for any exact solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrivialityReport {
    pub probes: usize,
    /// Both substitution identities hold at every probe.
    pub identities_hold: bool,
    pub max_identity_error: f64,
    /// `residual(x, x, z, z) = 0` at every probe.
    pub solution_at_probes: bool,
    /// A probe where the map is not a solution, with its residual.
    pub non_solution_witness: Option<(DyadicVector, DyadicVector, ValueVector)>,
    pub max_abs_value: f64,
    /// Either the map is a non-solution, or it vanishes at every probe.
    pub forced_zero_consistent: bool,
}

pub fn triviality_certificate(
    phi: &dyn TwoSlotMap,
    probes: &[(DyadicVector, DyadicVector)],
    tol: f64,
) -> Result<TrivialityReport> {
    if probes.is_empty() {
        return Err(Error::Precondition(
            "triviality probes must be non-empty".into(),
        ));
    }
    let form = EquationForm::PaperAQ;
    let mut max_identity_error = 0.0f64;
    let mut identities_hold = true;
    let mut solution = true;
    let mut witness = None;
    let mut max_abs = 0.0f64;
    for (x, z) in probes {
        let zero = DyadicVector::zeros(x.dim());
        let v = phi.eval(x, z)?;
        max_abs = max_abs.max(v.max_abs());

        let ra = phi.residual(form, x, x, z, &zero)?;
        let da = &phi.eval(&x.scale_pow2(1)?, z)? - &v.scale(2.0);
        let rb = phi.residual(form, x, &zero, z, z)?;
        let db = &phi.eval(x, &z.scale_pow2(1)?)? - &v.scale(4.0);
        let scale = 1.0 + ra.max_abs().max(rb.max_abs()).max(v.max_abs());
        let err = (&ra - &da).max_abs().max((&rb - &db).max_abs());
        max_identity_error = max_identity_error.max(err);
        if err > tol * scale {
            identities_hold = false;
        }

        let rs = phi.residual(form, x, x, z, z)?;
        if rs.max_abs() > tol * (1.0 + v.max_abs()) && solution {
            solution = false;
            witness = Some((x.clone(), z.clone(), rs));
        }
    }
    Ok(TrivialityReport {
        probes: probes.len(),
        identities_hold,
        max_identity_error,
        solution_at_probes: solution,
        non_solution_witness: witness,
        max_abs_value: max_abs,
        forced_zero_consistent: !solution || max_abs <= tol,
    })
}
