//! Scenario files: sectioned `key = value` text in TOML syntax.
//!
//! ```toml
//! experiment = "aggregate"
//! seed = 7
//! output = "aggregate"
//!
//! [domain]
//! kind = "disk_with_bite"
//! radius = 1.0
//! bite_center = [2.2, 0.0]
//! bite_radius = 1.5
//!
//! [potential.W]
//! kind = "quadratic"
//!
//! [potential.V]
//! kind = "zero"
//!
//! [initial]
//! recipe = "uniform_random"
//! count = 100
//!
//! [scheme]
//! kind = "catching_up"
//! dt = 0.01
//! t_end = 10.0
//! record_every = 10
//!
//! [check]
//! envelope_slack = 0.01
//! max_rate = -0.30
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::dynamics::{Scheme, SchemeConfig};
use crate::geometry::{Domain, GeometryError};
use crate::measures::InitialRecipe;
use crate::potentials::{builtin_potential, Potential, PotentialError, PotentialParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

impl ConfigError {
    fn field(field: &str, reason: impl std::fmt::Display) -> Self {
        ConfigError::Field { field: field.to_string(), reason: reason.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Stability,
    Aggregate,
    Sharpness,
    Instability,
    EviCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Stability => "stability",
            Experiment::Aggregate => "aggregate",
            Experiment::Sharpness => "sharpness",
            Experiment::Instability => "instability",
            Experiment::EviCheck => "evi_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeConfig {
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    UnitDisk,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    ConvexPolygon { vertices: Vec<[f64; 2]> },
    AnnulusSector { inner_radius: f64, outer_radius: f64, theta_min: f64, theta_max: f64 },
    DiskWithBite { radius: f64, bite_center: [f64; 2], bite_radius: f64 },
    PacManSector { radius: f64, theta_min: f64, theta_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DomainConfig {
    #[serde(flatten)]
    pub shape: ShapeConfig,
    /// Replaces the declared prox-regularity constant (for negative tests).
    pub eta_override: Option<f64>,
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain, GeometryError> {
        let d = match &self.shape {
            ShapeConfig::HalfSpace { normal, offset } => Domain::half_space(normal.clone(), *offset)?,
            ShapeConfig::Ball { center, radius } => Domain::ball(center.clone(), *radius)?,
            ShapeConfig::UnitDisk => Domain::unit_disk(),
            ShapeConfig::Box { lower, upper } => Domain::cuboid(lower.clone(), upper.clone())?,
            ShapeConfig::ConvexPolygon { vertices } => Domain::convex_polygon(vertices.clone())?,
            ShapeConfig::AnnulusSector { inner_radius, outer_radius, theta_min, theta_max } => {
                Domain::annulus_sector(*inner_radius, *outer_radius, *theta_min, *theta_max)?
            }
            ShapeConfig::DiskWithBite { radius, bite_center, bite_radius } => {
                Domain::disk_with_bite(*radius, *bite_center, *bite_radius)?
            }
            ShapeConfig::PacManSector { radius, theta_min, theta_max } => {
                Domain::pac_man_sector(*radius, *theta_min, *theta_max)?
            }
        };
        Ok(match self.eta_override {
            Some(eta) => d.with_eta(eta),
            None => d,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub strength: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub slope: Option<Vec<f64>>,
    pub exponent: Option<f64>,
    /// Time modulation `(1 + amplitude·sin(frequency·t))`.
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(default)]
    pub params: ParamsConfig,
}

impl PotentialConfig {
    pub fn zero() -> Self {
        PotentialConfig { kind: "zero".into(), params: ParamsConfig::default() }
    }

    pub fn build(&self) -> Result<Potential, PotentialError> {
        let p = &self.params;
        let base = builtin_potential(
            &self.kind,
            &PotentialParams {
                strength: p.strength,
                center: p.center.clone(),
                slope: p.slope.clone(),
                exponent: p.exponent,
            },
        )?;
        match p.amplitude {
            None => Ok(base),
            Some(a) if a.abs() < 1.0 => Ok(base.modulated(a, p.frequency.unwrap_or(1.0))),
            Some(_) => Err(PotentialError::InvalidParameter {
                name: self.kind.clone(),
                reason: "modulation amplitude must be below 1 in magnitude".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(rename = "W")]
    pub w: PotentialConfig,
    #[serde(rename = "V", default = "PotentialConfig::zero")]
    pub v: PotentialConfig,
    pub ladder: Option<LadderConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Grid { cells: usize },
    UniformRandom { count: usize, within_radius: Option<f64>, seed_offset: Option<u64> },
    Explicit { points: Vec<Vec<f64>>, masses: Option<Vec<f64>> },
}

impl InitialConfig {
    pub fn recipe(&self) -> InitialRecipe {
        match self {
            InitialConfig::Grid { cells } => InitialRecipe::Grid { cells: *cells },
            InitialConfig::UniformRandom { count, within_radius, .. } => {
                InitialRecipe::UniformRandom { count: *count, within_radius: *within_radius }
            }
            InitialConfig::Explicit { points, masses } => {
                InitialRecipe::Explicit { points: points.clone(), masses: masses.clone() }
            }
        }
    }

    pub fn seed_offset(&self) -> u64 {
        match self {
            InitialConfig::UniformRandom { seed_offset, .. } => seed_offset.unwrap_or(0),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    CatchingUp,
    ProjectedEuler,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    #[serde(default)]
    pub kind: SchemeKind,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl SchemeBlock {
    pub fn build(&self) -> SchemeConfig {
        let scheme = match self.kind {
            SchemeKind::CatchingUp => Scheme::CatchingUp,
            SchemeKind::ProjectedEuler => Scheme::ProjectedEuler,
        };
        SchemeConfig::new(scheme, self.dt, self.t_end, self.record_every)
    }
}

/// Thresholds of the PASS/FAIL checks. Unset fields fall back to the
/// experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Relative slack on exponential envelopes.
    pub envelope_slack: Option<f64>,
    /// Fitted log-slope must not exceed this.
    pub max_rate: Option<f64>,
    pub max_displacement: Option<f64>,
    pub max_dissipation: Option<f64>,
    /// Minimum final separation (instability).
    pub min_separation: Option<f64>,
    pub evi_tolerance: Option<f64>,
    /// Allowed per-step energy increase (simulate).
    pub energy_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EviConfig {
    pub h: f64,
    pub references: usize,
    /// Particles per reference measure.
    #[serde(default = "ten")]
    pub reference_size: usize,
    /// Times `t` at which the residual is evaluated.
    pub times: Vec<f64>,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub snapshots: bool,
    pub domain: DomainConfig,
    pub potential: PotentialBlock,
    pub initial: InitialConfig,
    /// Second initial measure (stability, instability).
    pub initial2: Option<InitialConfig>,
    pub scheme: SchemeBlock,
    #[serde(default)]
    pub check: CheckConfig,
    pub evi: Option<EviConfig>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// Cross-field consistency.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let domain = self.domain.build().map_err(|e| ConfigError::field("domain", e))?;
        let w = self.potential.w.build().map_err(|e| ConfigError::field("potential.W", e))?;
        let v = self.potential.v.build().map_err(|e| ConfigError::field("potential.V", e))?;
        let s = &self.scheme;
        if !(s.dt > 0.0) {
            return Err(ConfigError::field("scheme.dt", "must be positive"));
        }
        if !(s.t_end > 0.0) {
            return Err(ConfigError::field("scheme.t_end", "must be positive"));
        }
        if s.record_every == 0 {
            return Err(ConfigError::field("scheme.record_every", "must be at least 1"));
        }
        if let Some(l) = &self.potential.ladder {
            crate::potentials::ConvexityLadder::new(l.radii.clone(), &w, &v)
                .map_err(|e| ConfigError::field("potential.ladder.radii", e))?;
        }
        match self.experiment {
            Experiment::Aggregate => {
                if !v.is_zero() {
                    return Err(ConfigError::field("potential.V", "aggregate requires V = 0"));
                }
                if !(w.lambda() > 0.0) {
                    return Err(ConfigError::field("potential.W", "aggregate requires a strictly convex W"));
                }
                if !domain.is_bounded() {
                    return Err(ConfigError::field("domain", "aggregate requires a bounded domain"));
                }
            }
            Experiment::Stability | Experiment::Instability => {
                if self.initial2.is_none() {
                    return Err(ConfigError::field("initial2", "a second initial measure is required"));
                }
            }
            Experiment::EviCheck => {
                let Some(e) = &self.evi else {
                    return Err(ConfigError::field("evi", "section is required"));
                };
                if !(e.h > 0.0) || e.references == 0 || e.times.is_empty() {
                    return Err(ConfigError::field("evi", "h > 0, references ≥ 1 and nonempty times required"));
                }
                if !domain.is_bounded() {
                    return Err(ConfigError::field("domain", "evi_check requires a bounded domain"));
                }
            }
            Experiment::Simulate | Experiment::Sharpness => {}
        }
        Ok(())
    }
}
