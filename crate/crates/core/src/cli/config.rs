//! Run configuration: a TOML file with named sections plus flag overrides.

use crate::error::{Error, Result};
use crate::profiles::{Descriptor, ProfileFn, SystemGeometry, TLLModel};
use crate::pwt::{DEFAULT_EPS_PARITY, DEFAULT_EPS_SPEC};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    CheckPwt,
    Correlate,
    Invert,
    Wkb,
    Overlap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::CheckPwt => "check-pwt",
            Command::Correlate => "correlate",
            Command::Invert => "invert",
            Command::Wkb => "wkb",
            Command::Overlap => "overlap",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub model: ModelConfig,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub correlate: CorrelateConfig,
    pub invert: Option<InvertConfig>,
    #[serde(default)]
    pub wkb: WkbConfig,
    #[serde(default)]
    pub overlap: OverlapConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub length: f64,
    pub v: Option<Descriptor>,
    pub k: Option<Descriptor>,
    /// Direct potential q(x).
    pub q: Option<Descriptor>,
    /// Mass profile M(x), giving q = -v0^2 M^2 v.
    pub mass: Option<Descriptor>,
    /// Shortcut for the square-root family; overrides v and k.
    pub gegenbauer: Option<GegenbauerConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { length: 1.0, v: None, k: None, q: None, mass: None, gegenbauer: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GegenbauerConfig {
    pub alpha: f64,
    #[serde(default = "one")]
    pub v: f64,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default)]
    pub massive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Closed form for the square-root family, FD for other singular ends,
    /// shooting otherwise.
    #[default]
    Auto,
    Shooting,
    Fd,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    pub n_max: usize,
    pub grid_points: usize,
    pub eps_spec: f64,
    pub eps_parity: f64,
    /// Regularization length for correlators and overlaps.
    pub epsilon: Option<f64>,
    pub n_modes: usize,
    /// Gauss-Legendre nodes per panel in overlap integrals.
    pub quadrature_order: usize,
    pub solver: Solver,
    pub fd_base_points: usize,
    pub fd_levels: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            n_max: 20,
            grid_points: 1025,
            eps_spec: DEFAULT_EPS_SPEC,
            eps_parity: DEFAULT_EPS_PARITY,
            epsilon: None,
            n_modes: 64,
            quadrature_order: 128,
            solver: Solver::Auto,
            fd_base_points: 257,
            fd_levels: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), svg: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Correlator {
    #[default]
    PhiPhi,
    PhiTheta,
    ThetaTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrelateMethod {
    #[default]
    Series,
    /// Constant-K closed form on the unfolded circle.
    ClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateConfig {
    pub correlator: Correlator,
    pub method: CorrelateMethod,
    /// Defaults to -3L/8.
    pub x_prime: Option<f64>,
    pub x_points: usize,
    pub t_points: usize,
    /// Defaults to 2 L / v0.
    pub t_max: Option<f64>,
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        Self { correlator: Correlator::PhiPhi, method: CorrelateMethod::Series, x_prime: None, x_points: 129, t_points: 65, t_max: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    /// CSV with columns n, E; relative paths resolve against the config file.
    pub target: PathBuf,
    pub basis_size: usize,
    #[serde(default)]
    pub regularization: f64,
    #[serde(default = "one")]
    pub k0: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_fit_tol")]
    pub tol: f64,
    /// Modes compared in the round trip; defaults to all targets.
    pub n_check: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WkbConfig {
    pub fit_min: usize,
    pub fit_max: usize,
}

impl Default for WkbConfig {
    fn default() -> Self {
        Self { fit_min: 50, fit_max: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverlapConfig {
    /// Center of packet 1; defaults to -3L/8. Packet 2 is its specular image.
    pub center: Option<f64>,
    /// Defaults to L/20.
    pub sigma: Option<f64>,
    pub k: f64,
    /// Time window in units of T = L/v0.
    pub t_from: f64,
    pub t_to: f64,
    pub t_points: usize,
    pub weights: (f64, f64),
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self { center: None, sigma: None, k: 0.0, t_from: 0.8, t_to: 1.2, t_points: 21, weights: (0.5, 0.0) }
    }
}

fn one() -> f64 {
    1.0
}

fn default_iters() -> usize {
    50
}

fn default_fit_tol() -> f64 {
    1e-12
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n_max: Option<usize>,
    pub grid: Option<usize>,
    pub eps_spec: Option<f64>,
    pub epsilon: Option<f64>,
    pub modes: Option<usize>,
    pub svg: bool,
}

/// The square-root family with K = k (1 - s^2)^alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerModel {
    pub alpha: f64,
    pub v: f64,
    pub k: f64,
    pub massive: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::parse(&text)?;
        if let (Some(inv), Some(dir)) = (c.invert.as_mut(), path.parent()) {
            if inv.target.is_relative() {
                inv.target = dir.join(&inv.target);
            }
        }
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if let Some(n) = o.n_max {
            self.numeric.n_max = n;
        }
        if let Some(n) = o.grid {
            self.numeric.grid_points = n;
        }
        if let Some(e) = o.eps_spec {
            self.numeric.eps_spec = e;
        }
        if let Some(e) = o.epsilon {
            self.numeric.epsilon = Some(e);
        }
        if let Some(m) = o.modes {
            self.numeric.n_modes = m;
        }
        self.output.svg |= o.svg;
    }

    /// All numeric parameters must be positive.
    pub fn validate(&self) -> Result<()> {
        let n = &self.numeric;
        let bad = |what: &str| Err(Error::Usage(format!("{what} must be positive")));
        if !(self.model.length > 0.0) {
            return bad("model.length");
        }
        if n.n_max == 0 || n.n_modes == 0 || n.quadrature_order == 0 || n.fd_levels == 0 {
            return bad("n_max, n_modes, quadrature_order and fd_levels");
        }
        if n.grid_points < 5 || n.grid_points % 2 == 0 {
            return Err(Error::Usage("grid_points must be odd and at least 5".into()));
        }
        if n.fd_base_points < 5 || n.fd_base_points % 2 == 0 {
            return Err(Error::Usage("fd_base_points must be odd and at least 5".into()));
        }
        if !(n.eps_spec > 0.0) || !(n.eps_parity > 0.0) || n.epsilon.is_some_and(|e| !(e > 0.0)) {
            return bad("eps_spec, eps_parity and epsilon");
        }
        let c = &self.correlate;
        if c.x_points < 2 || c.t_points < 2 || c.t_max.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Usage("correlate needs x_points, t_points >= 2 and t_max > 0".into()));
        }
        let o = &self.overlap;
        if o.t_points == 0 || !(o.t_to >= o.t_from) || o.t_from < 0.0 || o.sigma.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::Usage("overlap needs t_points > 0, 0 <= t_from <= t_to and sigma > 0".into()));
        }
        if self.wkb.fit_min >= self.wkb.fit_max {
            return Err(Error::Usage("wkb.fit_min must be below wkb.fit_max".into()));
        }
        if let Some(i) = &self.invert {
            if i.basis_size == 0 || i.max_iters == 0 || !(i.tol > 0.0) || !(i.k0 > 0.0) || !(i.regularization >= 0.0) {
                return Err(Error::Usage("invert needs basis_size, max_iters, tol, k0 > 0 and regularization >= 0".into()));
            }
        }
        Ok(())
    }

    /// Recognized Gegenbauer structure, either declared or read off the descriptors.
    pub fn gegenbauer(&self) -> Option<GegenbauerModel> {
        let m = &self.model;
        if let Some(g) = m.gegenbauer {
            return Some(GegenbauerModel { alpha: g.alpha, v: g.v, k: g.k, massive: g.massive });
        }
        if m.q.is_some() || m.mass.is_some() {
            return None;
        }
        let v = match m.v {
            Some(Descriptor::Sqrt { amplitude }) => amplitude,
            _ => return None,
        };
        let (k, alpha) = match m.k.clone().unwrap_or(Descriptor::Constant { value: 1.0 }) {
            Descriptor::Constant { value } => (value, 0.0),
            Descriptor::Power { amplitude, alpha } => (amplitude, alpha),
            _ => return None,
        };
        Some(GegenbauerModel { alpha, v, k, massive: false })
    }

    pub fn build_model(&self) -> Result<TLLModel> {
        let m = &self.model;
        let l = m.length;
        let n = self.numeric.grid_points;
        if let Some(g) = m.gegenbauer {
            return TLLModel::gegenbauer(g.alpha, g.v, g.k, l, n, g.massive);
        }
        let v = m.v.clone().ok_or_else(|| Error::Usage("model.v (or model.gegenbauer) is required".into()))?;
        let k = m.k.clone().unwrap_or(Descriptor::Constant { value: 1.0 });
        let geom = SystemGeometry::new(l, n)?;
        let mut model = TLLModel::new(geom, ProfileFn::new(v, l)?, ProfileFn::new(k, l)?)?;
        match (&m.q, &m.mass) {
            (Some(_), Some(_)) => return Err(Error::Usage("give at most one of model.q and model.mass".into())),
            (Some(q), None) => model = model.with_q(ProfileFn::new(q.clone(), l)?)?,
            (None, Some(ms)) => model = model.with_mass(ProfileFn::new(ms.clone(), l)?)?,
            (None, None) => {}
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let c = RunConfig::parse(
            r#"
            command = "check-pwt"
            [model]
            v = { kind = "sqrt", amplitude = 1.0 }
            [numeric]
            n_max = 12
            "#,
        )
        .unwrap();
        assert_eq!(c.command, Some(Command::CheckPwt));
        assert_eq!(c.numeric.n_max, 12);
        assert_eq!(c.numeric.grid_points, 1025);
        assert_eq!(c.gegenbauer(), Some(GegenbauerModel { alpha: 0.0, v: 1.0, k: 1.0, massive: false }));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::parse("[model]\nvv = 1"), Err(Error::Usage(_))));
        let mut c = RunConfig::parse("[model]\nv = { kind = \"constant\", value = 1.0 }").unwrap();
        c.apply(&Overrides { grid: Some(100), ..Default::default() });
        assert!(matches!(c.validate(), Err(Error::Usage(_))));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::parse("[model]\nv = { kind = \"constant\", value = 1.0 }\n[numeric]\nn_modes = 8").unwrap();
        c.apply(&Overrides { modes: Some(32), epsilon: Some(0.1), svg: true, ..Default::default() });
        assert_eq!(c.numeric.n_modes, 32);
        assert_eq!(c.numeric.epsilon, Some(0.1));
        assert!(c.output.svg);
    }
}
