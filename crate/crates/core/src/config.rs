//! Experiment configuration files (TOML).
//!
//! ```toml
//! [modular]
//! kind = "power"          # or "orlicz" with young_table = "young.txt"
//! p = 1.0
//! dimension = 1
//!
//! [equation]
//! form = "paper_aq"       # or "symmetrized_aq"
//!
//! [control]
//! kind = "constant"
//! epsilon = 0.3
//!
//! [perturbation]
//! seed = 42
//! envelope = "auto"
//!
//! [solver]
//! branch = "up"
//! grid_points = 100
//!
//! [verify]
//! samples = 10000
//! ```
//!
//! Relative paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{AlphaTable, ControlFunction};
use crate::direct::{BranchKind, SolverConfig, MAX_ITERATIONS};
use crate::dyadic::DyadicVector;
use crate::equation::{EquationForm, TensorMap};
use crate::error::{Error, Result};
use crate::modular::{delta2_tau, ModularSpec, ValueVector, YoungTable, CONVERGENCE_TOL};
use crate::perturbation::{Envelope, PerturbationDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub modular: ModularSection,
    #[serde(default)]
    pub equation: EquationSection,
    pub control: ControlSection,
    #[serde(default)]
    pub perturbation: Option<PerturbationSection>,
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModularKindName {
    Power,
    Orlicz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModularSection {
    pub kind: ModularKindName,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub young_table: Option<PathBuf>,
    #[serde(default = "one")]
    pub dimension: usize,
    /// Overrides the computed Δ₂ constant.
    #[serde(default)]
    pub delta2_tau: Option<f64>,
    /// Sample count for estimating Δ₂ of an Orlicz modular.
    #[serde(default = "default_delta2_samples")]
    pub delta2_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSection {
    #[serde(default = "default_form")]
    pub form: EquationForm,
    /// Dimension of the domain; defaults to the modular dimension.
    #[serde(default)]
    pub domain_dimension: Option<usize>,
    #[serde(default)]
    pub tensor: Option<PathBuf>,
}

impl Default for EquationSection {
    fn default() -> Self {
        EquationSection {
            form: default_form(),
            domain_dimension: None,
            tensor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKindName {
    Constant,
    Power,
    Tabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub kind: ControlKindName,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub zero_extend: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeName {
    /// The envelope that satisfies the hypothesis by construction.
    Auto,
    Constant,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub seed: u64,
    #[serde(default = "default_envelope")]
    pub envelope: EnvelopeName,
    #[serde(default)]
    pub cap: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub branch: String,
    #[serde(default = "default_max_n")]
    pub max_n: u32,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
    #[serde(default = "default_bound_tol")]
    pub bound_tol: f64,
    #[serde(default = "default_uniqueness_tol")]
    pub uniqueness_tol: f64,
    /// Explicit grid rows `"x ; z"`.
    #[serde(default)]
    pub grid: Vec<String>,
    /// Random grid size, used when `grid` is empty.
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub grid_seed: u64,
    #[serde(default = "default_grid_numerator")]
    pub grid_numerator_bound: i64,
    #[serde(default = "default_grid_exponents")]
    pub grid_exponents: [i64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            samples: default_samples(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub report: Option<PathBuf>,
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn default_delta2_samples() -> usize {
    4096
}
fn default_form() -> EquationForm {
    EquationForm::PaperAQ
}
fn default_envelope() -> EnvelopeName {
    EnvelopeName::Auto
}
fn default_max_n() -> u32 {
    MAX_ITERATIONS
}
fn default_conv_tol() -> f64 {
    CONVERGENCE_TOL
}
fn default_bound_tol() -> f64 {
    1e-12
}
fn default_uniqueness_tol() -> f64 {
    1e-5
}
fn default_grid_numerator() -> i64 {
    16
}
fn default_grid_exponents() -> [i64; 2] {
    [-4, 4]
}
fn default_samples() -> usize {
    10_000
}

fn need<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing {what}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn existing(&self, p: &Path) -> Result<PathBuf> {
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(Error::Config(format!(
                "referenced file {} not found",
                full.display()
            )));
        }
        Ok(full)
    }

    pub fn modular_spec(&self) -> Result<ModularSpec> {
        let m = &self.modular;
        if m.dimension == 0 {
            return Err(Error::Config("modular.dimension must be ≥ 1".into()));
        }
        let spec = match m.kind {
            ModularKindName::Power => ModularSpec::power(need(m.p, "modular.p")?, m.dimension)?,
            ModularKindName::Orlicz => {
                let path = m
                    .young_table
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing modular.young_table".into()))?;
                let young = YoungTable::load(&self.existing(path)?)?;
                let spec = ModularSpec::orlicz(young, m.dimension)?;
                if m.delta2_tau.is_none() {
                    let samples = delta2_samples(m.dimension, m.delta2_samples);
                    let tau = delta2_tau(&spec, Some(&samples))?.tau;
                    return spec.with_delta2_tau(tau);
                }
                spec
            }
        };
        match m.delta2_tau {
            Some(tau) => spec.with_delta2_tau(tau),
            None => Ok(spec),
        }
    }

    pub fn domain_dimension(&self) -> usize {
        self.equation
            .domain_dimension
            .unwrap_or(self.modular.dimension)
    }

    pub fn tensor(&self) -> Result<Option<TensorMap>> {
        match &self.equation.tensor {
            None => Ok(None),
            Some(p) => Ok(Some(TensorMap::load(
                &self.existing(p)?,
                self.domain_dimension(),
                self.modular.dimension,
            )?)),
        }
    }

    pub fn control(&self) -> Result<ControlFunction> {
        let c = &self.control;
        match c.kind {
            ControlKindName::Constant => {
                ControlFunction::constant(need(c.epsilon, "control.epsilon")?)
            }
            ControlKindName::Power => {
                ControlFunction::power(need(c.theta, "control.theta")?, need(c.r, "control.r")?)
            }
            ControlKindName::Tabled => {
                let path = c
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing control.table".into()))?;
                Ok(ControlFunction::Tabled(AlphaTable::load(
                    &self.existing(path)?,
                    c.zero_extend,
                )?))
            }
        }
    }

    pub fn perturbation(
        &self,
        cf: &ControlFunction,
        spec: &ModularSpec,
    ) -> Result<Option<PerturbationDescriptor>> {
        let Some(p) = &self.perturbation else {
            return Ok(None);
        };
        let form = self.equation.form;
        Ok(Some(match p.envelope {
            EnvelopeName::Auto => PerturbationDescriptor::for_hypothesis(p.seed, cf, spec, form)?,
            EnvelopeName::Constant => PerturbationDescriptor {
                seed: p.seed,
                envelope: Envelope::ConstantCap {
                    cap: need(p.cap, "perturbation.cap")?,
                },
            },
            EnvelopeName::Power => PerturbationDescriptor {
                seed: p.seed,
                envelope: Envelope::PowerCap {
                    scale: need(p.scale, "perturbation.scale")?,
                    r: need(p.r, "perturbation.r")?,
                },
            },
        }))
    }

    pub fn branch(&self) -> Result<BranchKind> {
        self.solver.branch.parse()
    }

    pub fn grid(&self) -> Result<Vec<(DyadicVector, DyadicVector)>> {
        let s = &self.solver;
        if !s.grid.is_empty() {
            return s
                .grid
                .iter()
                .map(|row| {
                    let (x, z) = row.split_once(';').ok_or_else(|| {
                        Error::Config(format!("grid row {row:?} must be `x ; z`"))
                    })?;
                    Ok((x.trim().parse()?, z.trim().parse()?))
                })
                .collect();
        }
        let count = s
            .grid_points
            .ok_or_else(|| Error::Config("solver needs grid or grid_points".into()))?;
        let [lo, hi] = s.grid_exponents;
        if lo > hi || s.grid_numerator_bound < 1 {
            return Err(Error::Config("empty random grid range".into()));
        }
        Ok(random_grid(
            s.grid_seed,
            count,
            self.domain_dimension(),
            s.grid_numerator_bound,
            (lo, hi),
        ))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(self.branch()?, self.grid()?);
        cfg.max_n = s.max_n;
        cfg.conv_tol = s.conv_tol;
        cfg.bound_tol = s.bound_tol;
        cfg.uniqueness_tol = s.uniqueness_tol;
        Ok(cfg)
    }
}

/// Nonzero grid points; point `i` depends only on `(seed, i)`.
pub fn random_grid(
    seed: u64,
    count: usize,
    dim: usize,
    numerator_bound: i64,
    exponents: (i64, i64),
) -> Vec<(DyadicVector, DyadicVector)> {
    let point = |rng: &mut ChaCha8Rng| loop {
        let parts: Vec<(i64, i64)> = (0..dim)
            .map(|_| {
                (
                    rng.gen_range(-numerator_bound..=numerator_bound),
                    rng.gen_range(exponents.0..=exponents.1),
                )
            })
            .collect();
        let v = DyadicVector::from_parts(&parts).expect("bounded exponents");
        if !v.is_zero() {
            return v;
        }
    };
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = point(&mut rng);
            let z = point(&mut rng);
            (x, z)
        })
        .collect()
}

/// Deterministic value vectors spread over many magnitudes.
pub fn delta2_samples(dim: usize, count: usize) -> Vec<ValueVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0d2);
    (0..count)
        .map(|_| {
            ValueVector::new(
                (0..dim)
                    .map(|_| rng.gen_range(-1.0..1.0) * rng.gen_range(-20.0f64..20.0).exp2())
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[modular]
kind = "power"
p = 1.0

[control]
kind = "constant"
epsilon = 0.3

[perturbation]
seed = 42

[solver]
branch = "up"
grid = ["1 ; 1", "3/2^2 ; -5"]
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::parse(BASIC, Path::new(".")).unwrap();
        let spec = cfg.modular_spec().unwrap();
        assert_eq!(spec.delta2_tau, Some(2.0));
        let cf = cfg.control().unwrap();
        let d = cfg.perturbation(&cf, &spec).unwrap().unwrap();
        assert_eq!(d.envelope, Envelope::ConstantCap { cap: 0.09 / 8.0 });
        let s = cfg.solver_config().unwrap();
        assert_eq!(s.grid.len(), 2);
        assert_eq!(s.max_n, 60);
        assert_eq!(cfg.verify.samples, 10_000);
    }

    #[test]
    fn rejects_unknown_and_missing() {
        let bad = BASIC.replace("epsilon = 0.3", "epsilom = 0.3");
        let e = ExperimentConfig::parse(&bad, Path::new(".")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let cfg =
            ExperimentConfig::parse(&BASIC.replace("epsilon = 0.3", ""), Path::new(".")).unwrap();
        assert!(matches!(cfg.control(), Err(Error::Config(_))));
        let cfg = ExperimentConfig::parse(
            &BASIC
                .replace("[control]", "[control]\ntable = \"nope.txt\"")
                .replace("\"constant\"", "\"tabled\""),
            Path::new("."),
        )
        .unwrap();
        assert!(matches!(cfg.control(), Err(Error::Config(_))));
    }

    #[test]
    fn random_grid_is_deterministic() {
        let a = random_grid(3, 20, 2, 16, (-4, 4));
        assert_eq!(a, random_grid(3, 20, 2, 16, (-4, 4)));
        assert!(a.iter().all(|(x, z)| !x.is_zero() && !z.is_zero()));
    }
}
