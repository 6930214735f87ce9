//! The run configuration: a TOML document with fixed sections, overridable
//! key by key from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spde_lab::dynamics::{
    DiffusionSpec, DriftSpec, InitialProfile, OperatorSpec, ProblemSpec, Scheme, SolverConfig,
    DEFAULT_BLOWUP_THRESHOLD, DEFAULT_DT,
};
use spde_lab::montecarlo::EnsembleConfig;
use spde_lab::noise::Kernel;
use spde_lab::Domain1D;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub operator: OperatorSection,
    pub drift: DriftSection,
    pub noise: NoiseSection,
    pub kernel: KernelSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    pub mc: McSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub length: f64,
    pub n: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { length: 1.0, n: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorType {
    Laplacian,
    PLaplacian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    #[serde(rename = "type")]
    pub kind: OperatorType,
    pub p: f64,
    pub nu: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self { kind: OperatorType::Laplacian, p: 2.0, nu: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftFamily {
    Zero,
    Power,
    Fujita,
    AllenCahn,
    PowerDecay,
}

/// `allen_cahn` reads its coefficient from `a1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSection {
    pub family: DriftFamily,
    pub a1: f64,
    pub a2: f64,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self { family: DriftFamily::Zero, a1: 1.0, a2: 0.0, beta: 2.0, alpha: 1.0, gamma: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Zero,
    Power,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub family: NoiseFamily,
    pub b: f64,
    pub m: f64,
    pub k: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { family: NoiseFamily::Zero, b: 0.0, m: 1.0, k: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelType {
    Constant,
    Exponential,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    #[serde(rename = "type")]
    pub kind: KernelType,
    pub q0: f64,
    pub s2: f64,
    pub ell: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { kind: KernelType::Constant, q0: 1.0, s2: 1.0, ell: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Sine,
    ScaledPhi,
    Bump,
    Constant,
}

/// `bump` uses `amplitude` as its height and `constant` as its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub profile: InitialKind,
    pub amplitude: f64,
    pub mass: f64,
    pub center: f64,
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { profile: InitialKind::Sine, amplitude: 1.0, mass: 1.0, center: 0.5, width: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_max: f64,
    pub blowup_threshold: f64,
    pub record_stride: usize,
    /// Defaults to semi-implicit for the Laplacian, tamed explicit for the p-Laplacian.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, t_max: 0.1, blowup_threshold: DEFAULT_BLOWUP_THRESHOLD, record_stride: 1, scheme: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub paths: usize,
    pub seed: u64,
}

impl Default for McSection {
    fn default() -> Self {
        Self { paths: 100, seed: 0 }
    }
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.into(), message: message.into() }
}

fn keyed(err: spde_lab::Error) -> CliError {
    match err {
        spde_lab::Error::InvalidParameter { name, reason } => config_error(name, reason),
        other => CliError::Numeric(other),
    }
}

impl RunConfig {
    /// Reads `path` (or starts from defaults when `None`), applies the
    /// `key=value` overrides and validates the whole document.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => {
                std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.display().to_string(), source })?
            }
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| config_error("<document>", e.to_string()))?;
        for entry in overrides {
            apply_override(&mut table, entry)?;
        }
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let key = e.path().to_string();
            // Without overrides the document parser can point at the offending line.
            let message = match (overrides.is_empty(), toml::from_str::<RunConfig>(text)) {
                (true, Err(located)) => located.to_string(),
                _ => e.into_inner().to_string(),
            };
            config_error(key, message.trim_end())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every numeric constraint that any command relies on.
    pub fn validate(&self) -> Result<(), CliError> {
        let floats = [
            ("domain.length", self.domain.length),
            ("operator.p", self.operator.p),
            ("operator.nu", self.operator.nu),
            ("drift.a1", self.drift.a1),
            ("drift.a2", self.drift.a2),
            ("drift.beta", self.drift.beta),
            ("drift.alpha", self.drift.alpha),
            ("drift.gamma", self.drift.gamma),
            ("noise.b", self.noise.b),
            ("noise.m", self.noise.m),
            ("noise.k", self.noise.k),
            ("kernel.q0", self.kernel.q0),
            ("kernel.s2", self.kernel.s2),
            ("kernel.ell", self.kernel.ell),
            ("initial.amplitude", self.initial.amplitude),
            ("initial.mass", self.initial.mass),
            ("initial.center", self.initial.center),
            ("initial.width", self.initial.width),
            ("time.dt", self.time.dt),
            ("time.t_max", self.time.t_max),
            ("time.blowup_threshold", self.time.blowup_threshold),
        ];
        for (key, v) in floats {
            if !v.is_finite() {
                return Err(config_error(key, format!("must be finite, got {v}")));
            }
        }
        if !(self.time.blowup_threshold > 0.0) {
            return Err(config_error("time.blowup_threshold", "must be positive"));
        }
        if self.mc.paths == 0 {
            return Err(config_error("mc.paths", "must be at least 1"));
        }
        self.problem()?;
        self.solver()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain1D, CliError> {
        Domain1D::new(self.domain.length, self.domain.n).map_err(keyed)
    }

    pub fn operator(&self) -> OperatorSpec {
        match self.operator.kind {
            OperatorType::Laplacian => OperatorSpec::Laplacian { nu: self.operator.nu },
            OperatorType::PLaplacian => OperatorSpec::PLaplacian { p: self.operator.p },
        }
    }

    pub fn drift(&self) -> DriftSpec {
        let d = &self.drift;
        match d.family {
            DriftFamily::Zero => DriftSpec::Zero,
            DriftFamily::Power => DriftSpec::Power { a1: d.a1, a2: d.a2, beta: d.beta },
            DriftFamily::Fujita => DriftSpec::Fujita { alpha: d.alpha },
            DriftFamily::AllenCahn => DriftSpec::AllenCahn { a: d.a1 },
            DriftFamily::PowerDecay => DriftSpec::PowerDecay { gamma: d.gamma },
        }
    }

    pub fn diffusion(&self) -> DiffusionSpec {
        let n = &self.noise;
        match n.family {
            NoiseFamily::Zero => DiffusionSpec::Zero,
            NoiseFamily::Power => DiffusionSpec::Power { b: n.b, m: n.m },
            NoiseFamily::Gradient => DiffusionSpec::Gradient { k: n.k },
        }
    }

    pub fn kernel(&self) -> Kernel {
        let k = &self.kernel;
        match k.kind {
            KernelType::Constant => Kernel::Constant { q0: k.q0 },
            KernelType::Exponential => Kernel::Exponential { s2: k.s2, ell: k.ell },
            KernelType::Diagonal => Kernel::Diagonal { q0: k.q0 },
        }
    }

    pub fn initial(&self) -> InitialProfile {
        let i = &self.initial;
        match i.profile {
            InitialKind::Sine => InitialProfile::Sine { amplitude: i.amplitude },
            InitialKind::ScaledPhi => InitialProfile::ScaledPhi { mass: i.mass },
            InitialKind::Bump => InitialProfile::Bump { center: i.center, width: i.width, height: i.amplitude },
            InitialKind::Constant => InitialProfile::Constant { c: i.amplitude },
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        let problem = ProblemSpec {
            domain: self.domain()?,
            operator: self.operator(),
            drift: self.drift(),
            diffusion: self.diffusion(),
            kernel: self.kernel(),
            initial: self.initial(),
        };
        problem.validate().map_err(keyed)?;
        Ok(problem)
    }

    pub fn scheme(&self) -> Scheme {
        self.time.scheme.unwrap_or_else(|| Scheme::default_for(&self.operator()))
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let solver = SolverConfig::new(self.time.dt, self.time.t_max, self.scheme())
            .with_stride(self.time.record_stride)
            .with_threshold(self.time.blowup_threshold);
        solver.validate().map_err(keyed)?;
        if self.operator.kind == OperatorType::PLaplacian && solver.scheme == Scheme::SemiImplicit {
            return Err(config_error("time.scheme", "the p-Laplacian needs the tamed_explicit scheme"));
        }
        Ok(solver)
    }

    pub fn ensemble(&self, workers: usize) -> EnsembleConfig {
        EnsembleConfig::new(self.mc.paths, self.mc.seed).with_workers(workers)
    }
}

/// Sets `section.key = value` in `table`. The value is read as a TOML literal
/// when it parses as one and as a bare string otherwise.
fn apply_override(table: &mut toml::Table, entry: &str) -> Result<(), CliError> {
    let (path, raw) =
        entry.split_once('=').ok_or_else(|| config_error(entry, "override must have the form section.key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        return Err(config_error(path, "override key must be a dotted path such as time.dt"));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let (last, parents) = keys.split_last().expect("at least two keys");
    let mut cursor = table;
    for (depth, key) in parents.iter().enumerate() {
        let slot = cursor.entry((*key).to_owned()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = slot.as_table_mut().ok_or_else(|| config_error(keys[..=depth].join("."), "is not a section"))?;
    }
    cursor.insert((*last).to_owned(), value);
    Ok(())
}
