//! JSON experiment configuration, flag overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use metaplectic_core::hermite::hermite_state;
use metaplectic_core::symplectic::random_symplectic;
use metaplectic_core::{Axis, Complex64, QuadraticHamiltonian, SampledWavefunction, SymplecticMatrix, Tolerances};
use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::io::{read_matrix, read_wavefunction, MatrixJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Factor,
    Flow,
    Apply,
    Propagate,
    AmalgamNorm,
    Estimate,
    Regularity,
    Verify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Factor => "factor",
            Command::Flow => "flow",
            Command::Apply => "apply",
            Command::Propagate => "propagate",
            Command::AmalgamNorm => "amalgam-norm",
            Command::Estimate => "estimate",
            Command::Regularity => "regularity",
            Command::Verify => "verify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedKind {
    Identity,
    Standard,
    Rotation,
    Shear,
    Random,
    Oscillator,
    FreeParticle,
}

/// A matrix given inline, by name, or as a path to a JSON/CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(MatrixJson),
    Named {
        kind: NamedKind,
        #[serde(default = "one")]
        n: usize,
        /// Angle for `rotation`, time for `shear`.
        #[serde(default)]
        param: f64,
        seed: Option<u64>,
    },
    Path(PathBuf),
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub x0: f64,
    pub dx: f64,
    #[serde(rename = "N")]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    One(AxisSpec),
    Many(Vec<AxisSpec>),
}

impl GridSpec {
    pub fn axes(&self) -> Result<Vec<Axis>> {
        let specs = match self {
            GridSpec::One(a) => vec![*a],
            GridSpec::Many(v) => v.clone(),
        };
        if !(1..=2).contains(&specs.len()) {
            return Err(CliError::Config(format!("grid must have 1 or 2 axes, got {}", specs.len())));
        }
        specs.iter().map(|a| Ok(Axis::new(a.x0, a.dx, a.count)?)).collect()
    }
}

/// A complex number as `re` or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    /// `h_k(x₁)` in 1-D, `h_k(x₁)h_{k2}(x₂)` in 2-D.
    Hermite {
        k: usize,
        #[serde(default)]
        k2: usize,
    },
    /// `e^{−a|x − center|²/2ħ}`, normalized.
    Gaussian {
        a: ComplexSpec,
        #[serde(default)]
        center: f64,
    },
    File {
        path: PathBuf,
    },
}

/// `1 <= p <= ∞`, written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        exponent_value(self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => Ok(Exponent(n.as_f64().unwrap_or(f64::NAN))),
            Value::String(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") => {
                Ok(Exponent(f64::INFINITY))
            }
            other => Err(serde::de::Error::custom(format!("expected an exponent or \"inf\", got {other}"))),
        }
    }
}

pub fn exponent_value(p: f64) -> Value {
    if p.is_infinite() {
        Value::String("inf".into())
    } else {
        serde_json::json!(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Metaplectic,
    Splitstep,
    /// Both routes plus a per-snapshot error report.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureSpec {
    Fast,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateSpec {
    Cross,
    SameSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareSpec {
    L2,
    Phase,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub tol_sym: Option<f64>,
    pub tol_free: Option<f64>,
    pub hbar: Option<f64>,
    /// Symplectic matrix for `factor`, `apply`, `estimate`.
    pub matrix: Option<MatrixSource>,
    /// Hamiltonian matrix for `flow`, `propagate`, `regularity`.
    #[serde(rename = "M")]
    pub hamiltonian: Option<MatrixSource>,
    pub grid: Option<GridSpec>,
    pub initial: Option<InitialSpec>,
    pub times: Option<Vec<f64>>,
    pub method: Option<MethodSpec>,
    pub dt: Option<f64>,
    pub compare: Option<CompareSpec>,
    pub quadrature: Option<QuadratureSpec>,
    pub sheet: Option<u8>,
    pub allow_aliasing: Option<bool>,
    pub p: Option<Exponent>,
    pub q: Option<Exponent>,
    pub window_width: Option<f64>,
    pub hop: Option<f64>,
    pub freq_count: Option<usize>,
    pub estimate: Option<EstimateSpec>,
}

/// Sets `key` (dotted path) to `raw`, parsed as JSON when possible.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed override key {key:?}")));
    }
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_owned(), value);
            return Ok(());
        }
        cur = obj.entry((*part).to_owned()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

/// Splits `KEY=VALUE`.
pub fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_owned(), v.to_owned()))
}

pub fn load_value(path: Option<&Path>) -> Result<Value> {
    let Some(path) = path else {
        return Ok(Value::Object(Default::default()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::Config(format!("{}: top level must be a JSON object", path.display())));
    }
    Ok(value)
}

pub fn parse_config(value: &Value) -> Result<ExperimentConfig> {
    ExperimentConfig::deserialize(value).map_err(|e| CliError::Config(e.to_string()))
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn hbar(&self) -> Result<f64> {
        let h = self.hbar.unwrap_or(1.0);
        if !(h > 0.0) || !h.is_finite() {
            return Err(CliError::Config(format!("hbar must be positive, got {h}")));
        }
        Ok(h)
    }

    pub fn tolerances(&self) -> Result<Tolerances> {
        let d = Tolerances::default();
        let t = Tolerances { sym: self.tol_sym.unwrap_or(d.sym), free: self.tol_free.unwrap_or(d.free) };
        if !(t.sym > 0.0) || !(t.free > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        Ok(t)
    }

    pub fn require<'a, T>(field: &'a Option<T>, name: &str, command: Command) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| CliError::Config(format!("`{command}` needs `{name}`")))
    }

    pub fn exponents(&self, command: Command) -> Result<(f64, f64)> {
        let p = Self::require(&self.p, "p", command)?.0;
        let q = Self::require(&self.q, "q", command)?.0;
        for v in [p, q] {
            if !(v >= 1.0) {
                return Err(CliError::Config(format!("exponents must lie in [1, inf], got {v}")));
            }
        }
        Ok((p, q))
    }

    pub fn times(&self, command: Command) -> Result<Vec<f64>> {
        let times = Self::require(&self.times, "times", command)?.clone();
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("times must be a nonempty list of finite numbers".into()));
        }
        Ok(times)
    }

    pub fn symplectic(&self, command: Command) -> Result<SymplecticMatrix> {
        let src = Self::require(&self.matrix, "matrix", command)?;
        let tol = self.tolerances()?;
        let m = match src {
            MatrixSource::Named { kind, n, param, seed } => match kind {
                NamedKind::Identity => SymplecticMatrix::identity(*n)?,
                NamedKind::Standard => SymplecticMatrix::standard(*n)?,
                NamedKind::Rotation => SymplecticMatrix::rotation(*n, *param)?,
                NamedKind::Shear => SymplecticMatrix::shear(*n, *param)?,
                NamedKind::Random => random_symplectic(*n, seed.unwrap_or(self.seed()))?,
                NamedKind::Oscillator | NamedKind::FreeParticle => {
                    return Err(CliError::Config(format!("`matrix` cannot be the Hamiltonian {kind:?}")))
                }
            },
            other => SymplecticMatrix::new(self.raw_matrix(other)?, tol.sym)?,
        };
        Ok(m)
    }

    pub fn hamiltonian(&self, command: Command) -> Result<QuadraticHamiltonian> {
        let src = Self::require(&self.hamiltonian, "M", command)?;
        let tol = self.tolerances()?;
        match src {
            MatrixSource::Named { kind: NamedKind::Oscillator, n, .. } => Ok(QuadraticHamiltonian::oscillator(*n)?),
            MatrixSource::Named { kind: NamedKind::FreeParticle, n, .. } => {
                Ok(QuadraticHamiltonian::free_particle(*n)?)
            }
            MatrixSource::Named { kind, .. } => {
                Err(CliError::Config(format!("`M` must be a Hamiltonian matrix, not {kind:?}")))
            }
            other => Ok(QuadraticHamiltonian::new(self.raw_matrix(other)?, tol.sym)?),
        }
    }

    fn raw_matrix(&self, src: &MatrixSource) -> Result<DMatrix<f64>> {
        match src {
            MatrixSource::Inline(m) => m.to_matrix().map_err(CliError::Config),
            MatrixSource::Path(p) => read_matrix(p),
            MatrixSource::Named { .. } => unreachable!("named matrices are built by the caller"),
        }
    }

    pub fn axes(&self, command: Command) -> Result<Vec<Axis>> {
        Self::require(&self.grid, "grid", command)?.axes()
    }

    /// The initial wavefunction on `grid` (a file brings its own grid).
    pub fn initial(&self, command: Command) -> Result<SampledWavefunction> {
        let spec = Self::require(&self.initial, "initial", command)?;
        let hbar = self.hbar()?;
        if let InitialSpec::File { path } = spec {
            let psi = read_wavefunction(path, hbar)?;
            if let Some(grid) = &self.grid {
                let axes = grid.axes()?;
                if axes.len() != psi.dim() || axes.iter().zip(psi.axes()).any(|(a, b)| !a.same_as(b)) {
                    return Err(CliError::Config(format!("{} does not lie on the configured grid", path.display())));
                }
            }
            return Ok(psi);
        }
        let axes = self.axes(command)?;
        let profile = |axis: Axis, which: usize| -> Result<Vec<Complex64>> {
            Ok(match spec {
                InitialSpec::Hermite { k, k2 } => {
                    hermite_state(if which == 0 { *k } else { *k2 }, axis, hbar)?.into_values()
                }
                InitialSpec::Gaussian { a, center } => {
                    let a = a.value();
                    if !(a.re > 0.0) {
                        return Err(metaplectic_core::Error::DivergentGaussian { re_a: a.re }.into());
                    }
                    let c = if which == 0 { *center } else { 0.0 };
                    axis.points().map(|x| (-a * (x - c) * (x - c) / (2.0 * hbar)).exp()).collect()
                }
                InitialSpec::File { .. } => unreachable!("handled above"),
            })
        };
        let values = match axes.as_slice() {
            [a] => profile(*a, 0)?,
            [a, b] => {
                let (u, v) = (profile(*a, 0)?, profile(*b, 1)?);
                u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect()
            }
            _ => unreachable!("GridSpec::axes checks the dimension"),
        };
        let psi = SampledWavefunction::new(axes, values, hbar)?;
        match spec {
            InitialSpec::Gaussian { .. } => psi
                .normalized()
                .ok_or_else(|| CliError::Config("initial Gaussian vanishes on the grid".into())),
            _ => Ok(psi),
        }
    }
}
