//! JSON run configuration, flag overrides and validation.

use std::collections::BTreeSet;
use std::path::PathBuf;

use nmbloch::oracle::DiscretizationScheme;
use nmbloch::{CorrectionMode, KernelConfig, KernelSpec, SpinState, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Smallest ensemble accepted by `mc` runs.
pub const MIN_TRAJECTORIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Bloch,
    Oracle,
    Mc,
    Sweep,
    Compare,
}

/// A single solver; the modes `sweep` and `compare` combine these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bloch,
    Oracle,
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bloch => "bloch",
            Method::Oracle => "oracle",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub modes: usize,
    pub cutoff: usize,
    pub scheme: DiscretizationScheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    pub dt: f64,
    pub stride: usize,
    pub rotating_wave: bool,
    pub max_dimension: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            modes: 64,
            cutoff: 3,
            scheme: DiscretizationScheme::Minimax,
            bandwidth: None,
            dt: 0.1,
            stride: 1,
            rotating_wave: false,
            max_dimension: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "Gamma")]
    Strength,
    #[serde(rename = "Omega")]
    Modulation,
    #[serde(rename = "T")]
    Temperature,
    #[serde(rename = "omega")]
    Splitting,
    #[serde(rename = "N")]
    Order,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Strength => "Gamma",
            SweepParam::Modulation => "Omega",
            SweepParam::Temperature => "T",
            SweepParam::Splitting => "omega",
            SweepParam::Order => "N",
        }
    }
}

/// Quantity held fixed while the swept parameter varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hold {
    /// Keep the product `γΓ`; `Γ` co-varies with `γ`.
    #[serde(rename = "gamma_Gamma")]
    GammaGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold: Option<Hold>,
    /// Solver run for every value.
    #[serde(default = "default_sweep_method")]
    pub method: Method,
}

fn default_sweep_method() -> Method {
    Method::Bloch
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// The first method is the reference for the deltas.
    pub methods: Vec<Method>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Bloch, Method::Oracle],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    pub omega: f64,
    pub kernel: KernelConfig,
    #[serde(default = "default_initial")]
    pub initial: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionMode>,
    #[serde(rename = "N", alias = "order", default = "default_order")]
    pub order: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default = "default_noise_dt")]
    pub noise_dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_threshold: Option<f64>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_initial() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn default_order() -> usize {
    10
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    30.0
}
fn default_stride() -> usize {
    10
}
fn default_noise_dt() -> f64 {
    0.05
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub order: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    pub n_traj: Option<usize>,
    pub output: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn core_usage(e: nmbloch::Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| usage(format!("malformed config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(n) = o.order {
            self.order = n;
        }
        if let Some(dt) = o.dt {
            self.dt = dt;
        }
        if let Some(t) = o.t_max {
            self.t_max = t;
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(n) = o.n_traj {
            self.n_traj = Some(n);
        }
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("output"))
    }

    /// Correction mode used by the hierarchy: explicit, or chosen from the kernel.
    pub fn system(&self) -> Result<SystemSpec, CliError> {
        match self.kernel.resolve().map_err(core_usage)? {
            KernelSpec::Exponential(k) => {
                let correction = self.correction.unwrap_or(if k.is_real() {
                    CorrectionMode::None
                } else {
                    CorrectionMode::SigmaXFreeze
                });
                SystemSpec::new(self.omega, k, self.initial, correction).map_err(core_usage)
            }
            KernelSpec::Thermal(_) => Err(usage("thermal kernels only run in the bloch method")),
        }
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        match self.mode {
            Mode::Bloch => self.validate_method(Method::Bloch),
            Mode::Oracle => self.validate_method(Method::Oracle),
            Mode::Mc => self.validate_method(Method::Mc),
            Mode::Sweep => {
                let entries = self.sweep_entries()?;
                for (_, cfg) in &entries {
                    cfg.validate()?;
                }
                Ok(())
            }
            Mode::Compare => {
                let methods = &self.compare.clone().unwrap_or_default().methods;
                if methods.len() < 2 {
                    return Err(usage("compare needs at least two methods"));
                }
                let distinct: BTreeSet<_> = methods.iter().collect();
                if distinct.len() != methods.len() {
                    return Err(usage("compare methods must be distinct"));
                }
                for &m in methods {
                    self.validate_method(m)?;
                }
                Ok(())
            }
        }
    }

    fn validate_method(&self, method: Method) -> Result<(), CliError> {
        if !self.omega.is_finite() {
            return Err(usage("omega must be finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(usage(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(usage(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.stride == 0 {
            return Err(usage("stride must be >= 1"));
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(usage(format!("run_id {id:?} is not a plain file name")));
            }
        }
        let kernel = self.kernel.resolve().map_err(core_usage)?;
        if let Some(f) = self.fit_threshold {
            if !(f > 0.0) {
                return Err(usage("fit_threshold must be > 0"));
            }
        }
        match method {
            Method::Bloch => match kernel {
                KernelSpec::Exponential(_) => {
                    self.system()?;
                }
                KernelSpec::Thermal(_) => {
                    if self.correction.is_some() {
                        return Err(usage("thermal kernels always use the sigma-x-freeze correction"));
                    }
                    if nmbloch::matrix::BlochVector::from_real(self.initial).real_norm() > 1.0 + 8.0 * f64::EPSILON {
                        return Err(usage("initial Bloch vector has length > 1"));
                    }
                }
            },
            Method::Oracle => {
                self.system()?;
                SpinState::from_bloch(self.initial).map_err(core_usage)?;
                let o = &self.oracle;
                if o.modes < 2 {
                    return Err(usage("oracle.modes must be >= 2"));
                }
                if !(o.dt > 0.0 && o.dt.is_finite()) || o.stride == 0 {
                    return Err(usage("oracle.dt must be > 0 and oracle.stride >= 1"));
                }
                if o.bandwidth.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
                    return Err(usage("oracle.bandwidth must be > 0"));
                }
            }
            Method::Mc => {
                self.system()?;
                if self.seed.is_none() {
                    return Err(usage("mc runs require a seed"));
                }
                match self.n_traj {
                    None => return Err(usage("mc runs require n_traj")),
                    Some(n) if n < MIN_TRAJECTORIES => {
                        return Err(usage(format!("n_traj must be >= {MIN_TRAJECTORIES}, got {n}")))
                    }
                    _ => {}
                }
                if !(self.noise_dt > 0.0 && self.noise_dt.is_finite()) {
                    return Err(usage("noise_dt must be > 0"));
                }
                nmbloch::NoiseGrid::covering(self.t_max, self.noise_dt).map_err(core_usage)?;
            }
        }
        Ok(())
    }

    /// `(value label, derived single-method config)` for every sweep value.
    pub fn sweep_entries(&self) -> Result<Vec<(String, RunConfig)>, CliError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| usage("sweep mode requires a \"sweep\" axis"))?;
        if sweep.values.is_empty() {
            return Err(usage("sweep axis has no values"));
        }
        if sweep.hold.is_some() && sweep.param != SweepParam::Gamma {
            return Err(usage("hold \"gamma_Gamma\" only applies to a gamma sweep"));
        }
        let product = self.kernel.gamma * self.kernel.strength;
        let mut labels = BTreeSet::new();
        let mut out = Vec::with_capacity(sweep.values.len());
        for &v in &sweep.values {
            if !v.is_finite() {
                return Err(usage(format!("sweep value {v} is not finite")));
            }
            let mut cfg = self.clone();
            cfg.mode = match sweep.method {
                Method::Bloch => Mode::Bloch,
                Method::Oracle => Mode::Oracle,
                Method::Mc => Mode::Mc,
            };
            cfg.sweep = None;
            cfg.compare = None;
            let label = match sweep.param {
                SweepParam::Gamma => {
                    cfg.kernel.gamma = v;
                    if sweep.hold == Some(Hold::GammaGamma) {
                        cfg.kernel.strength = product / v;
                    }
                    format!("{v}")
                }
                SweepParam::Strength => {
                    cfg.kernel.strength = v;
                    format!("{v}")
                }
                SweepParam::Modulation => {
                    cfg.kernel.modulation = Some(v);
                    format!("{v}")
                }
                SweepParam::Temperature => {
                    cfg.kernel.temperature = Some(v);
                    format!("{v}")
                }
                SweepParam::Splitting => {
                    cfg.omega = v;
                    format!("{v}")
                }
                SweepParam::Order => {
                    if v < 0.0 || v.fract() != 0.0 || v > 1e6 {
                        return Err(usage(format!("N must be a non-negative integer, got {v}")));
                    }
                    cfg.order = v as usize;
                    format!("{}", cfg.order)
                }
            };
            let label = format!("{}={label}", sweep.param.name());
            if !labels.insert(label.clone()) {
                return Err(usage(format!("sweep value {label} appears twice")));
            }
            out.push((label, cfg));
        }
        Ok(out)
    }
}
