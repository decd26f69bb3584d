//! Run configuration, read from TOML.
//!
//! Every section and key is optional; missing values take the defaults
//! below. A complete file with the defaults:
//!
//! ```toml
//! order = 3            # truncation order N, 1..=8
//! eps = 0.1            # interval overlap, strictly between 0 and 1/4
//! times = [100.0, 1000.0, 10000.0]
//! seed = 42
//! workers = 1
//! convention = "leading"   # or "alpha-scaled"
//!
//! [domain.boundary]
//! kind = "circle"      # circle | ellipse | custom-smooth
//! center = [2.0, 0.5]
//! radius = 1.0
//!
//! [domain.weight]
//! kind = "constant"    # constant | gaussian
//! value = 1.0
//!
//! [quadrature]
//! panel_nodes = 4      # Gauss points per panel of the adapted rule
//! log_window = 40.0
//! ratio = 2.0          # geometric panel growth
//! moment_nodes = 64    # Gauss points per direction for the moments
//!
//! [grid]
//! x_mode = "relative"  # x measured from C(Y) t, or "absolute"
//! x_lo = -4.0
//! x_hi = 12.0
//! nx = 161
//! y_ratios = [0.5]     # Y = y / t; y = Y t at each time
//!
//! [compare]
//! xi = 2.0
//! y_ratio = 0.5
//!
//! [ridges]
//! y_ratios = [0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7]
//!
//! [validate]
//! y_ratios = [0.1, 0.3, 0.5, 0.7, 0.9]
//! points = 5
//! trials = 100
//!
//! [output]
//! dir = "out"
//! ```
//!
//! `custom-smooth` boundaries take `center`, `mean`, `cos = [...]` and
//! `sin = [...]`; ellipses take `center` and `radii`; gaussian weights take
//! `amplitude`, `center` and `width`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use kptrain_core::asymptotics::GammaConvention;
use kptrain_core::domain::{BoundarySpec, SpectralDomain, WeightSpec};
use kptrain_core::fredholm::AdaptedOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub convention: GammaConvention,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub ridges: RidgesConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_order() -> usize {
    3
}
fn default_eps() -> f64 {
    0.1
}
fn default_times() -> Vec<f64> {
    vec![100.0, 1000.0, 10000.0]
}
fn default_seed() -> u64 {
    42
}
fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub boundary: BoundarySpec,
    #[serde(default = "unit_weight")]
    pub weight: WeightSpec,
}

fn unit_weight() -> WeightSpec {
    WeightSpec::Constant { value: 1.0 }
}

impl Default for DomainConfig {
    fn default() -> Self {
        let d = SpectralDomain::default_circle();
        DomainConfig { boundary: d.boundary, weight: d.weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub panel_nodes: usize,
    pub log_window: f64,
    pub ratio: f64,
    pub moment_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { panel_nodes: 4, log_window: 40.0, ratio: 2.0, moment_nodes: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XMode {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_mode: XMode,
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub y_ratios: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x_mode: XMode::Relative, x_lo: -4.0, x_hi: 12.0, nx: 161, y_ratios: vec![0.5] }
    }
}

impl GridConfig {
    pub fn x_axis(&self) -> Vec<f64> {
        if self.nx == 1 {
            return vec![self.x_lo];
        }
        (0..self.nx).map(|i| self.x_lo + (self.x_hi - self.x_lo) * i as f64 / (self.nx - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub xi: f64,
    pub y_ratio: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { xi: 2.0, y_ratio: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RidgesConfig {
    pub y_ratios: Vec<f64>,
}

impl Default for RidgesConfig {
    fn default() -> Self {
        RidgesConfig { y_ratios: (0..9).map(|i| 0.3 + 0.05 * i as f64).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub y_ratios: Vec<f64>,
    pub points: usize,
    pub trials: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig { y_ratios: vec![0.1, 0.3, 0.5, 0.7, 0.9], points: 5, trials: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            order: default_order(),
            eps: default_eps(),
            times: default_times(),
            seed: default_seed(),
            workers: default_workers(),
            convention: GammaConvention::default(),
            domain: DomainConfig::default(),
            quadrature: QuadratureConfig::default(),
            grid: GridConfig::default(),
            compare: CompareConfig::default(),
            ridges: RidgesConfig::default(),
            validate: ValidateConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Rejects values outside the supported ranges.
    pub fn check(&self) -> anyhow::Result<()> {
        if !(self.eps > 0.0 && self.eps < 0.25) {
            bail!("eps = {} must lie strictly between 0 and 1/4", self.eps);
        }
        if !(1..=8).contains(&self.order) {
            bail!("N = {} must lie in 1..=8", self.order);
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            bail!("times must be a non-empty list of positive numbers");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.quadrature.panel_nodes == 0 || self.quadrature.moment_nodes == 0 {
            bail!("quadrature node counts must be positive");
        }
        if self.grid.nx == 0 || self.grid.y_ratios.is_empty() || !(self.grid.x_hi >= self.grid.x_lo) {
            bail!("grid needs nx >= 1, x_hi >= x_lo and at least one y ratio");
        }
        Ok(())
    }

    /// Asymptotic commands need `t > 1`.
    pub fn check_asymptotic_times(&self) -> anyhow::Result<()> {
        if let Some(t) = self.times.iter().find(|t| **t <= 1.0) {
            bail!("t = {t} must exceed 1 for asymptotic output");
        }
        Ok(())
    }

    pub fn spectral_domain(&self) -> SpectralDomain {
        SpectralDomain::new(self.domain.boundary.clone(), self.domain.weight.clone())
    }

    pub fn adapted(&self) -> AdaptedOptions {
        AdaptedOptions { m: self.quadrature.panel_nodes, log_window: self.quadrature.log_window, ratio: self.quadrature.ratio }
    }
}
