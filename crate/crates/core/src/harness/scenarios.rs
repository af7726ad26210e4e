//! Built-in scenarios. The committed configuration files under
//! `scenarios/` are embedded so the binary can run them by name.

use std::f64::consts::PI;

use crate::geometry::{Domain, GeometryError};
use crate::measures::ParticleMeasure;

use super::config::{ConfigError, ScenarioConfig};

pub const BUILTIN: &[(&str, &str)] = &[
    ("aggregate", include_str!("../../../../scenarios/aggregate.toml")),
    ("sharpness", include_str!("../../../../scenarios/sharpness.toml")),
    ("instability", include_str!("../../../../scenarios/instability.toml")),
    ("stability", include_str!("../../../../scenarios/stability.toml")),
    ("contraction", include_str!("../../../../scenarios/contraction.toml")),
    ("evi", include_str!("../../../../scenarios/evi.toml")),
    ("energy", include_str!("../../../../scenarios/energy.toml")),
    ("support_growth", include_str!("../../../../scenarios/support_growth.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ScenarioConfig::from_toml(text))
}

/// Annular sector `1 − ε ≤ r ≤ 1`, `−ε ≤ θ ≤ π + ε` and the two-point
/// measure with half masses at its lower inner corners.
pub fn sharpness_configuration(eps: f64) -> Result<(Domain, ParticleMeasure), GeometryError> {
    let r = 1.0 - eps;
    let domain = Domain::annulus_sector(r, 1.0, -eps, PI + eps)?;
    let mu = ParticleMeasure::new(2, vec![-r * eps.cos(), -r * eps.sin(), r * eps.cos(), -r * eps.sin()], vec![0.5, 0.5])
        .expect("two half masses");
    Ok((domain, mu))
}

/// Unit sector of opening `3π/2` with the inside corner at the origin and
/// two Dirac masses at `(0, ±δ)`.
pub fn instability_configuration(delta: f64) -> (Domain, ParticleMeasure, ParticleMeasure) {
    let domain = Domain::pac_man_sector(1.0, PI / 4.0, 7.0 * PI / 4.0).expect("valid sector");
    let up = ParticleMeasure::new(2, vec![0.0, delta], vec![1.0]).expect("unit mass");
    let down = ParticleMeasure::new(2, vec![0.0, -delta], vec![1.0]).expect("unit mass");
    (domain, up, down)
}
