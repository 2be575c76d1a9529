//! Run configuration: JSON file plus `--set key=value` overrides, strictly typed.

use std::path::{Path, PathBuf};

use dynakernel::ball_heat::Truncation;
use dynakernel::halfspace::GPlusForm;
use dynakernel::stochastic::Scheme;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Ball,
    Halfspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "G_laplace")]
    GLaplace,
    P,
    K,
    Gamma,
    #[serde(rename = "Gamma_D")]
    GammaD,
    #[serde(rename = "G_heat")]
    GHeat,
    E1,
    F1,
    H1,
    #[serde(rename = "scriptG1")]
    ScriptG1,
    #[serde(rename = "scriptH1")]
    ScriptH1,
    #[serde(rename = "tildeGamma1")]
    TildeGamma1,
    #[serde(rename = "tildeH1")]
    TildeH1,
    G1dyn,
    #[serde(rename = "corrector")]
    Corrector,
    #[serde(rename = "bound_h")]
    BoundH,
    #[serde(rename = "bound_l")]
    BoundL,
}

impl Kernel {
    pub fn uses_time(self) -> bool {
        !matches!(self, Kernel::Phi | Kernel::GLaplace | Kernel::P)
    }

    /// Domains the kernel is defined on.
    pub fn allows(self, d: Domain) -> bool {
        match self {
            Kernel::Phi | Kernel::GLaplace | Kernel::P | Kernel::K | Kernel::Gamma | Kernel::GammaD => true,
            Kernel::GHeat => d == Domain::Halfspace,
            _ => d == Domain::Ball,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenKind {
    Dirichlet,
    Wentzell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Both,
    G1,
    U,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    /// Sphere rule order; 0 picks 256 nodes on the circle or 32 x 64 on the sphere.
    pub sphere: usize,
    /// Radial Gauss order of volume rules.
    pub radial: usize,
    /// Gauss order per panel of graded time rules.
    pub time: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { sphere: 0, radial: 60, time: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Also compare the mean exit time from each `x` with `(1 - |x|^2) / (2n)`.
    pub exit_time: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 100_000, dt: 1e-4, seed: 2024, scheme: Scheme::Euler, exit_time: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualConfig {
    pub which: Which,
    pub h: f64,
    pub k: f64,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig { which: Which::Both, h: 1e-3, k: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub poisson: f64,
    pub k1: f64,
    pub f1_mass: f64,
    pub g1dyn_mass: f64,
    pub gplus_mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { poisson: 1e-10, k1: 1e-10, f1_mass: 1e-4, g1dyn_mass: 1e-3, gplus_mass: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: usize,
    pub domain: Domain,
    pub kernel: Kernel,
    pub truncation: Truncation,
    pub quadrature: Quadrature,
    pub g_plus_form: GPlusForm,
    pub mc: McConfig,
    pub residual: ResidualConfig,
    pub tolerances: Tolerances,
    pub eigen: EigenKind,
    /// Evaluation points; each has `n` coordinates.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// Equally spread boundary nodes appended to `y`.
    pub y_sphere: usize,
    pub t: Vec<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 2,
            domain: Domain::Ball,
            kernel: Kernel::P,
            truncation: Truncation::default(),
            quadrature: Quadrature::default(),
            g_plus_form: GPlusForm::Image,
            mc: McConfig::default(),
            residual: ResidualConfig::default(),
            tolerances: Tolerances::default(),
            eigen: EigenKind::Dirichlet,
            x: vec![],
            y: vec![],
            y_sphere: 0,
            t: vec![],
            output: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Sets `a.b.c` in a JSON object, creating intermediate objects. The value is parsed as JSON,
/// falling back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return err(format!("override `{assignment}` is not key=value"));
    };
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return err(format!("bad override key `{key}`"));
        }
        let Value::Object(map) = node else {
            return err(format!("override `{key}` descends into a non-object"));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut root: Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        if !root.is_object() {
            return err("config must be a JSON object");
        }
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(root).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n != 2 && self.n != 3 {
            return err(format!("n must be 2 or 3, got {}", self.n));
        }
        if !self.kernel.allows(self.domain) {
            return err(format!("kernel {:?} is not defined on domain {:?}", self.kernel, self.domain));
        }
        for p in self.x.iter().chain(&self.y) {
            if p.len() != self.n {
                return err(format!("point {p:?} does not have {} coordinates", self.n));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return err(format!("point {p:?} is not finite"));
            }
        }
        if self.t.iter().any(|t| !t.is_finite()) {
            return err("t values must be finite");
        }
        let tr = self.truncation;
        if tr.lmax > 100 || tr.kmax == 0 || tr.kmax > 200 {
            return err("truncation caps: lmax <= 100, 1 <= kmax <= 200");
        }
        if self.mc.paths == 0 || !(self.mc.dt > 0.0 && self.mc.dt <= 1e-3) {
            return err("mc needs paths > 0 and 0 < dt <= 1e-3");
        }
        if !(self.residual.h > 0.0 && self.residual.k > 0.0) {
            return err("residual steps must be positive");
        }
        Ok(())
    }

    /// Checks specific to a command.
    pub fn validate_for(&self, cmd: &str) -> Result<(), ConfigError> {
        match cmd {
            "eval" => {
                if self.x.is_empty() || (self.y.is_empty() && self.y_sphere == 0) {
                    return err("eval needs nonempty x and y grids");
                }
                if self.kernel.uses_time() && self.t.is_empty() {
                    return err("eval of a time-dependent kernel needs a t grid");
                }
            }
            "mc" | "residual" if self.domain != Domain::Ball => return err(format!("{cmd} runs on the ball only")),
            "residual" if !self.t.is_empty() => {
                if !self.t.windows(2).all(|w| w[1] < w[0]) || self.t.iter().any(|&t| t <= 0.0) {
                    return err("t-grid must be positive and strictly decreasing");
                }
            }
            _ => {}
        }
        if cmd == "mc" && (self.x.is_empty() || (!self.mc.exit_time && (self.y.is_empty() || self.t.is_empty()))) {
            return err("mc needs x, and y and t unless only exit times are requested");
        }
        Ok(())
    }
}
