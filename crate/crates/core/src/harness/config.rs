//! TOML experiment configuration.
//!
//! Lengths are either plain numbers in metres or strings with a unit:
//! `"32lambda"`, `"32λ"`, `"0.25m"`, `"12cm"`, `"3mm"`. Angles are in
//! radians, or strings ending in `deg`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    optimal_orientation, partition_rx, polarization_axis, spherical_center, Deployment, Partition,
    PhysicalConstants,
};
use crate::spectrum::MAX_DIM;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn length(&self, lambda: f64, field: &str) -> Result<f64> {
        match self {
            Quantity::Number(x) => Ok(*x),
            Quantity::Text(s) => parse_length(s, lambda).ok_or_else(|| {
                Error::Config(format!("{field}: cannot read '{s}' as a length"))
            }),
        }
    }

    pub fn angle(&self, field: &str) -> Result<f64> {
        match self {
            Quantity::Number(x) => Ok(*x),
            Quantity::Text(s) => parse_angle(s)
                .ok_or_else(|| Error::Config(format!("{field}: cannot read '{s}' as an angle"))),
        }
    }
}

fn split_unit<'a>(s: &'a str, units: &[&'a str]) -> Option<(f64, &'a str)> {
    let s = s.trim();
    for u in units {
        if let Some(head) = s.strip_suffix(u) {
            return head.trim().parse().ok().map(|x| (x, *u));
        }
    }
    s.parse().ok().map(|x| (x, ""))
}

pub fn parse_length(s: &str, lambda: f64) -> Option<f64> {
    let (x, u) = split_unit(s, &["lambda", "λ", "mm", "cm", "m"])?;
    Some(match u {
        "lambda" | "λ" => x * lambda,
        "mm" => x * 1e-3,
        "cm" => x * 1e-2,
        _ => x,
    })
}

pub fn parse_angle(s: &str) -> Option<f64> {
    let (x, u) = split_unit(s, &["deg", "rad"])?;
    Some(if u == "deg" { x.to_radians() } else { x })
}

fn num(x: f64) -> Quantity {
    Quantity::Number(x)
}

fn text(s: &str) -> Quantity {
    Quantity::Text(s.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    /// Rx centre as `[x, y, z]`; excludes `distance`, `theta` and `phi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[Quantity; 3]>,
    /// Defaults to 256 wavelengths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Quantity>,
    #[serde(default = "zero")]
    pub alpha: Quantity,
    #[serde(default = "zero")]
    pub beta: Quantity,
    /// Replace `alpha`/`beta` by the orientation maximizing the count.
    #[serde(default)]
    pub optimal_orientation: bool,
    /// Full side lengths.
    #[serde(default = "default_side")]
    pub tx_side: [Quantity; 2],
    #[serde(default = "default_side")]
    pub rx_side: [Quantity; 2],
    #[serde(default = "default_pol")]
    pub polarization: [String; 2],
}

fn default_frequency() -> f64 {
    28e9
}
fn default_distance() -> Quantity {
    text("256lambda")
}
fn zero() -> Quantity {
    num(0.0)
}
fn default_side() -> [Quantity; 2] {
    [text("32lambda"), text("32lambda")]
}
fn default_pol() -> [String; 2] {
    ["x".into(), "x".into()]
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            frequency_hz: default_frequency(),
            center: None,
            distance: None,
            theta: None,
            phi: None,
            alpha: zero(),
            beta: zero(),
            optimal_orientation: false,
            tx_side: default_side(),
            rx_side: default_side(),
            polarization: default_pol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default = "one")]
    pub n_u: usize,
    #[serde(default = "one")]
    pub n_v: usize,
}

fn one() -> usize {
    1
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { n_u: 1, n_v: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Nodes per wavelength along each side.
    #[serde(default = "default_density")]
    pub points_per_lambda: f64,
    #[serde(default)]
    pub tx_points_per_lambda: Option<f64>,
    #[serde(default)]
    pub rx_points_per_lambda: Option<f64>,
    /// Largest grid accepted by the dense solvers.
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_nodes() -> usize {
    MAX_DIM
}

fn default_density() -> f64 {
    2.0
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            points_per_lambda: default_density(),
            tx_points_per_lambda: None,
            rx_points_per_lambda: None,
            max_nodes: MAX_DIM,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Exact Green kernel through the channel matrix.
    Exact,
    /// Sum of modulated per-piece sinc kernels.
    Approx,
    /// Per-piece sinc kernels with their focusing functions.
    Composite,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "approx" => Ok(Self::Approx),
            "composite" => Ok(Self::Composite),
            _ => Err(Error::Config(format!("unknown kernel '{s}' (exact, approx, composite)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_scalings")]
    pub scalings: Vec<f64>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    /// Waveforms kept by the single-piece solver.
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Smallest concentration kept per piece by the split solver.
    #[serde(default = "default_conc")]
    pub min_concentration: f64,
    /// Output directory used when the command line gives none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn default_gammas() -> Vec<f64> {
    vec![0.9, 0.5, 0.1]
}
fn default_scalings() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_kernel() -> KernelKind {
    KernelKind::Exact
}
fn default_modes() -> usize {
    12
}
fn default_conc() -> f64 {
    0.5
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gammas: default_gammas(),
            scalings: default_scalings(),
            kernel: default_kernel(),
            modes: default_modes(),
            min_concentration: default_conc(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default = "yes")]
    pub numeric: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub deployment: DeploymentConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Canonical TOML text, used for hashing.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<()> {
        let n = &self.numerics;
        for (name, v) in [
            ("numerics.points_per_lambda", Some(n.points_per_lambda)),
            ("numerics.tx_points_per_lambda", n.tx_points_per_lambda),
            ("numerics.rx_points_per_lambda", n.rx_points_per_lambda),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("{name}: must be positive, got {v}")));
                }
            }
        }
        if n.max_nodes == 0 || n.max_nodes > MAX_DIM {
            return Err(Error::Config(format!(
                "numerics.max_nodes: must lie in 1..={MAX_DIM}, got {}",
                n.max_nodes
            )));
        }
        if self.partition.n_u == 0 || self.partition.n_v == 0 {
            return Err(Error::Config("partition: counts must be at least 1".into()));
        }
        if let Some(g) = self.experiment.gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::Config(format!("experiment.gammas: {g} is outside [0, 1]")));
        }
        if let Some(r) = self.experiment.scalings.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Config(format!("experiment.scalings: {r} must be positive")));
        }
        self.deployment()?;
        Ok(())
    }

    pub fn constants(&self) -> Result<PhysicalConstants> {
        PhysicalConstants::from_frequency(self.deployment.frequency_hz)
            .map_err(|e| Error::Config(format!("deployment.frequency_hz: {e}")))
    }

    pub fn deployment(&self) -> Result<Deployment> {
        let k = self.constants()?;
        let l = k.wavelength;
        let d = &self.deployment;
        let center = match &d.center {
            Some(_) if d.distance.is_some() || d.theta.is_some() || d.phi.is_some() => {
                return Err(Error::Config(
                    "deployment.center: give either center or distance/theta/phi, not both".into(),
                ))
            }
            Some([x, y, z]) => Vec3::new(
                x.length(l, "deployment.center[0]")?,
                y.length(l, "deployment.center[1]")?,
                z.length(l, "deployment.center[2]")?,
            ),
            None => {
                let (dist, theta, phi) = self.spherical()?;
                spherical_center(dist, theta, phi)
            }
        };
        let (alpha, beta) = if d.optimal_orientation {
            optimal_orientation(center).map_err(|e| Error::Config(format!("deployment.optimal_orientation: {e}")))?
        } else {
            (d.alpha.angle("deployment.alpha")?, d.beta.angle("deployment.beta")?)
        };
        let half = |q: &[Quantity; 2], f: &str| -> Result<[f64; 2]> {
            Ok([
                0.5 * q[0].length(l, &format!("{f}[0]"))?,
                0.5 * q[1].length(l, &format!("{f}[1]"))?,
            ])
        };
        let pol = |s: &str, f: &str| polarization_axis(s).map_err(|e| Error::Config(format!("{f}: {e}")));
        Deployment::new(
            k,
            center,
            alpha,
            beta,
            half(&d.tx_side, "deployment.tx_side")?,
            half(&d.rx_side, "deployment.rx_side")?,
        )
        .and_then(|dep| {
            dep.with_polarization(
                pol(&d.polarization[0], "deployment.polarization[0]")?,
                pol(&d.polarization[1], "deployment.polarization[1]")?,
            )
        })
        .map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("deployment: {other}")),
        })
    }

    /// Spherical centre fields with their defaults applied.
    pub fn spherical(&self) -> Result<(f64, f64, f64)> {
        let l = self.constants()?.wavelength;
        let d = &self.deployment;
        Ok((
            d.distance.clone().unwrap_or_else(default_distance).length(l, "deployment.distance")?,
            d.theta.clone().unwrap_or_else(zero).angle("deployment.theta")?,
            d.phi.clone().unwrap_or_else(zero).angle("deployment.phi")?,
        ))
    }

    pub fn partition(&self, dep: &Deployment) -> Result<Partition> {
        partition_rx(dep, self.partition.n_u, self.partition.n_v)
    }

    pub fn tx_density(&self) -> f64 {
        self.numerics.tx_points_per_lambda.unwrap_or(self.numerics.points_per_lambda)
    }

    pub fn rx_density(&self) -> f64 {
        self.numerics.rx_points_per_lambda.unwrap_or(self.numerics.points_per_lambda)
    }
}
