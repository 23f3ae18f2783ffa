//! Sampling check of `ρ(residual) ≤ α(x, y) α(z, w)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{alpha_eval, ControlFunction};
use crate::dyadic::DyadicVector;
use crate::equation::{EquationForm, TwoSlotMap};
use crate::error::{Error, Result};
use crate::modular::{rho, ModularSpec};

pub type Tuple = (DyadicVector, DyadicVector, DyadicVector, DyadicVector);

const NUMERATOR_BOUND: i64 = 1 << 16;
const EXPONENT_BOUND: i64 = 8;
const MAX_WITNESSES: usize = 8;

/// A dyadic vector with numerators in `[−2¹⁶, 2¹⁶]` and exponents in `[−8, 8]`.
pub fn random_point(rng: &mut impl Rng, dim: usize) -> DyadicVector {
    let parts: Vec<(i64, i64)> = (0..dim)
        .map(|_| {
            (
                rng.gen_range(-NUMERATOR_BOUND..=NUMERATOR_BOUND),
                rng.gen_range(-EXPONENT_BOUND..=EXPONENT_BOUND),
            )
        })
        .collect();
    DyadicVector::from_parts(&parts).expect("bounded exponents")
}

/// `count` tuples `(x, y, z, w)`; tuple `i` depends only on `(seed, i)`.
/// About one in eight has `y = 0` and one in eight has `w = 0`.
pub fn random_tuples(seed: u64, count: usize, dim: usize) -> Vec<Tuple> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = random_point(&mut rng, dim);
            let mut y = random_point(&mut rng, dim);
            let z = random_point(&mut rng, dim);
            let mut w = random_point(&mut rng, dim);
            if rng.gen_ratio(1, 8) {
                y = DyadicVector::zeros(dim);
            }
            if rng.gen_ratio(1, 8) {
                w = DyadicVector::zeros(dim);
            }
            (x, y, z, w)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisWitness {
    pub index: usize,
    pub x: DyadicVector,
    pub y: DyadicVector,
    pub z: DyadicVector,
    pub w: DyadicVector,
    pub rho_residual: f64,
    pub control: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub form: EquationForm,
    pub samples: usize,
    pub passed: usize,
    pub pass_rate: f64,
    /// Largest `ρ(residual) / (α·α)` over tuples with a nonzero control.
    pub worst_ratio: f64,
    /// Tuples with `α(x, y) α(z, w) = 0`, which require a zero residual.
    pub zero_control_cases: usize,
    pub zero_control_failures: usize,
    pub witnesses: Vec<HypothesisWitness>,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.passed == self.samples
    }
}

pub fn verify_hypothesis(
    form: EquationForm,
    phi: &dyn TwoSlotMap,
    cf: &ControlFunction,
    spec: &ModularSpec,
    tuples: &[Tuple],
) -> Result<HypothesisReport> {
    if tuples.is_empty() {
        return Err(Error::Precondition(
            "hypothesis check needs at least one tuple".into(),
        ));
    }
    if phi.dims().1 != spec.dimension {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension,
            found: phi.dims().1,
        });
    }
    let rows = tuples
        .par_iter()
        .map(|(x, y, z, w)| {
            let r = rho(spec, &phi.residual(form, x, y, z, w)?);
            let c = alpha_eval(cf, x, y)? * alpha_eval(cf, z, w)?;
            Ok((r, c))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let mut report = HypothesisReport {
        form,
        samples: tuples.len(),
        passed: 0,
        pass_rate: 0.0,
        worst_ratio: 0.0,
        zero_control_cases: 0,
        zero_control_failures: 0,
        witnesses: Vec::new(),
    };
    for (index, ((x, y, z, w), &(r, c))) in tuples.iter().zip(&rows).enumerate() {
        let ok = if c == 0.0 {
            report.zero_control_cases += 1;
            let ok = r == 0.0;
            if !ok {
                report.zero_control_failures += 1;
            }
            ok
        } else {
            report.worst_ratio = report.worst_ratio.max(r / c);
            r <= c * (1.0 + 1e-9)
        };
        if ok {
            report.passed += 1;
        } else if report.witnesses.len() < MAX_WITNESSES {
            report.witnesses.push(HypothesisWitness {
                index,
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
                w: w.clone(),
                rho_residual: r,
                control: c,
            });
        }
    }
    report.pass_rate = report.passed as f64 / report.samples as f64;
    Ok(report)
}
