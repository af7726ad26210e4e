//! Domains in ℝᵈ, normal cones, and tangent-cone projection.
//!
//! Every domain answers three queries: membership, metric projection, and
//! the normal cone at a point of the set. The tangent cone is never stored;
//! projecting a velocity onto it goes through the Moreau split against the
//! normal cone.

mod checks;
mod cone;
mod domain;
mod planar;

pub use checks::{
    ball_exclusion_check, convex_monotonicity_check, moreau_identity_check, product_projection_check,
    prox_inequality_check, tangent_square_convexity_check, ProxReport,
};
pub use cone::{moreau_decompose, Cone};
pub use domain::{Domain, Projection, Shape};

use thiserror::Error;

/// Absolute tolerance for membership at the boundary.
pub const TOL_GEOM: f64 = 1e-12;
/// Points closer than this to a vertex get the two-sided corner cone.
pub const TOL_CORNER: f64 = 1e-9;
/// Tolerance for orthogonality and cone-membership identities.
pub const TOL_NUM: f64 = 1e-10;
/// Distance to a boundary piece below which the piece counts as active
/// when building a normal cone.
pub const TOL_BOUNDARY: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {0:?} is outside the domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("dimension mismatch: domain is {expected}-dimensional, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

/// A point (or vector) of ℝᵈ with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()), "non-finite coordinate");
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::new(v)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v.to_vec())
    }
}

// Small dense-vector helpers shared across the crate.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}
