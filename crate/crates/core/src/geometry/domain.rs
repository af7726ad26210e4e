use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::planar::{angle_offset, polar, Boundary, Piece, P2};
use super::{dot, norm, Cone, GeometryError, Point, TOL_BOUNDARY, TOL_CORNER, TOL_GEOM};

/// The analytic primitives a [`Domain`] can be built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `{x : ⟨normal, x⟩ ≤ offset}` with unit `normal`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Counter-clockwise vertex list.
    ConvexPolygon { vertices: Vec<[f64; 2]> },
    /// `{(r cos θ, r sin θ) : r_in ≤ r ≤ r_out, θ_min ≤ θ ≤ θ_max}`.
    AnnulusSector { inner_radius: f64, outer_radius: f64, theta_min: f64, theta_max: f64 },
    /// Closed disk of `radius` about the origin minus the open disk of
    /// `bite_radius` about `bite_center`.
    DiskWithBite { radius: f64, bite_center: [f64; 2], bite_radius: f64 },
    /// Circular sector with an inside corner at the origin when the opening
    /// exceeds π. Not prox-regular.
    PacManSector { radius: f64, theta_min: f64, theta_max: f64 },
}

/// Outcome of a metric projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Point,
    /// Set when several nearest points exist; `point` is then the
    /// lexicographically smallest of them.
    pub ambiguous: bool,
}

/// A closed subset of ℝᵈ with its prox-regularity constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    dim: usize,
    eta: f64,
    diameter: f64,
    max_norm: f64,
    boundary: Option<Boundary>,
}

fn invalid(msg: impl Into<String>) -> GeometryError {
    GeometryError::InvalidDomain(msg.into())
}

fn check_finite(values: &[f64], what: &str) -> Result<(), GeometryError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be finite")))
    }
}

impl Domain {
    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self, GeometryError> {
        check_finite(&normal, "half-space normal")?;
        check_finite(&[offset], "half-space offset")?;
        let n = norm(&normal);
        if normal.is_empty() || n == 0.0 {
            return Err(invalid("half-space normal must be nonzero"));
        }
        let dim = normal.len();
        let normal: Vec<f64> = normal.iter().map(|c| c / n).collect();
        Ok(Domain {
            shape: Shape::HalfSpace { normal, offset: offset / n },
            dim,
            eta: f64::INFINITY,
            diameter: f64::INFINITY,
            max_norm: f64::INFINITY,
            boundary: None,
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        check_finite(&center, "ball center")?;
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("ball needs a center and a positive radius"));
        }
        let max_norm = norm(&center) + radius;
        Ok(Domain {
            dim: center.len(),
            shape: Shape::Ball { center, radius },
            eta: f64::INFINITY,
            diameter: 2.0 * radius,
            max_norm,
            boundary: None,
        })
    }

    pub fn unit_disk() -> Self {
        Domain::ball(vec![0.0, 0.0], 1.0).expect("unit disk is valid")
    }

    pub fn cuboid(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        check_finite(&lower, "box bounds")?;
        check_finite(&upper, "box bounds")?;
        if lower.is_empty() || lower.len() != upper.len() || lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            return Err(invalid("box needs lower < upper componentwise"));
        }
        let diameter = super::dist(&lower, &upper);
        let max_norm = lower
            .iter()
            .zip(&upper)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(Domain {
            dim: lower.len(),
            shape: Shape::Box { lower, upper },
            eta: f64::INFINITY,
            diameter,
            max_norm,
            boundary: None,
        })
    }

    pub fn convex_polygon(mut vertices: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(invalid("polygon needs at least three vertices"));
        }
        check_finite(&vertices.iter().flatten().copied().collect::<Vec<_>>(), "polygon vertices")?;
        let area2: f64 = (0..vertices.len())
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        if area2.abs() <= f64::EPSILON {
            return Err(invalid("polygon is degenerate"));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let k = vertices.len();
        for i in 0..k {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % k], vertices[(i + 2) % k]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross < -1e-14 {
                return Err(invalid("polygon is not convex"));
            }
        }
        let mut boundary = Boundary { pieces: Vec::with_capacity(k), vertices: Vec::new() };
        for i in 0..k {
            let (a, b) = (vertices[i], vertices[(i + 1) % k]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let l = e[0].hypot(e[1]);
            boundary.pieces.push(Piece::Segment { a, b, normal: [e[1] / l, -e[0] / l] });
        }
        for i in 0..k {
            boundary.add_corner(vertices[(i + 1) % k], &[i, (i + 1) % k]);
        }
        let mut diameter: f64 = 0.0;
        for a in &vertices {
            for b in &vertices {
                diameter = diameter.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        let max_norm = vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        Ok(Domain {
            shape: Shape::ConvexPolygon { vertices },
            dim: 2,
            eta: f64::INFINITY,
            diameter,
            max_norm,
            boundary: Some(boundary),
        })
    }

    pub fn annulus_sector(
        inner_radius: f64,
        outer_radius: f64,
        theta_min: f64,
        theta_max: f64,
    ) -> Result<Self, GeometryError> {
        check_finite(&[inner_radius, outer_radius, theta_min, theta_max], "annulus sector parameters")?;
        let span = theta_max - theta_min;
        if !(inner_radius > 0.0 && outer_radius > inner_radius) {
            return Err(invalid("annulus sector needs 0 < inner_radius < outer_radius"));
        }
        if !(span > 0.0 && span < TAU) {
            return Err(invalid("annulus sector needs 0 < theta_max - theta_min < 2π"));
        }
        let (r0, r1) = (inner_radius, outer_radius);
        let seg_min_normal = [theta_min.sin(), -theta_min.cos()];
        let seg_max_normal = [-theta_max.sin(), theta_max.cos()];
        let mut boundary = Boundary {
            pieces: vec![
                Piece::Arc { center: [0.0, 0.0], radius: r1, start: theta_min, span, orientation: 1.0 },
                Piece::Arc { center: [0.0, 0.0], radius: r0, start: theta_min, span, orientation: -1.0 },
                Piece::Segment { a: polar(r0, theta_min), b: polar(r1, theta_min), normal: seg_min_normal },
                Piece::Segment { a: polar(r0, theta_max), b: polar(r1, theta_max), normal: seg_max_normal },
            ],
            vertices: Vec::new(),
        };
        boundary.add_corner(polar(r1, theta_min), &[0, 2]);
        boundary.add_corner(polar(r1, theta_max), &[0, 3]);
        boundary.add_corner(polar(r0, theta_min), &[1, 2]);
        boundary.add_corner(polar(r0, theta_max), &[1, 3]);

        // The concave inner arc limits η to r_in; when the opening exceeds π
        // the two inner corners face each other across the gap and the
        // bisector of the gap sits at distance r_in·sin(gap/2) from both.
        let gap = TAU - span;
        let eta = if gap < PI { r0 * (gap / 2.0).sin() } else { r0 };
        let diameter = if span >= PI {
            2.0 * r1
        } else {
            let chord = 2.0 * r1 * (span / 2.0).sin();
            let cross = (r1 * r1 + r0 * r0 - 2.0 * r1 * r0 * span.cos()).sqrt();
            chord.max(cross)
        };
        Ok(Domain {
            shape: Shape::AnnulusSector { inner_radius, outer_radius, theta_min, theta_max },
            dim: 2,
            eta,
            diameter,
            max_norm: r1,
            boundary: Some(boundary),
        })
    }

    pub fn disk_with_bite(radius: f64, bite_center: [f64; 2], bite_radius: f64) -> Result<Self, GeometryError> {
        check_finite(&[radius, bite_center[0], bite_center[1], bite_radius], "disk-with-bite parameters")?;
        if !(radius > 0.0 && bite_radius > 0.0) {
            return Err(invalid("disk with bite needs positive radii"));
        }
        let d = bite_center[0].hypot(bite_center[1]);
        if bite_radius >= d + radius {
            return Err(invalid("bite covers the whole disk"));
        }
        let origin = [0.0, 0.0];
        let mut boundary = Boundary { pieces: Vec::new(), vertices: Vec::new() };
        let outer_span;
        if d >= radius + bite_radius {
            boundary.pieces.push(Piece::Arc { center: origin, radius, start: 0.0, span: TAU, orientation: 1.0 });
            outer_span = TAU;
        } else if d + bite_radius <= radius {
            boundary.pieces.push(Piece::Arc { center: origin, radius, start: 0.0, span: TAU, orientation: 1.0 });
            boundary.pieces.push(Piece::Arc {
                center: bite_center,
                radius: bite_radius,
                start: 0.0,
                span: TAU,
                orientation: -1.0,
            });
            outer_span = TAU;
        } else {
            let phi = bite_center[1].atan2(bite_center[0]);
            // Signed distance from the origin to the common chord, along the
            // direction of the bite centre.
            let a = (radius * radius - bite_radius * bite_radius + d * d) / (2.0 * d);
            let alpha = (a / radius).clamp(-1.0, 1.0).acos();
            let beta = ((d - a) / bite_radius).clamp(-1.0, 1.0).acos();
            outer_span = TAU - 2.0 * alpha;
            boundary.pieces.push(Piece::Arc {
                center: origin,
                radius,
                start: phi + alpha,
                span: outer_span,
                orientation: 1.0,
            });
            boundary.pieces.push(Piece::Arc {
                center: bite_center,
                radius: bite_radius,
                start: phi + PI - beta,
                span: 2.0 * beta,
                orientation: -1.0,
            });
            boundary.add_corner(polar(radius, phi + alpha), &[0, 1]);
            boundary.add_corner(polar(radius, phi - alpha), &[0, 1]);
        }
        // Extreme points of the convex hull all lie on the outer arc.
        let diameter = if outer_span >= PI { 2.0 * radius } else { 2.0 * radius * (outer_span / 2.0).sin() };
        Ok(Domain {
            shape: Shape::DiskWithBite { radius, bite_center, bite_radius },
            dim: 2,
            eta: bite_radius,
            diameter,
            max_norm: radius,
            boundary: Some(boundary),
        })
    }

    pub fn pac_man_sector(radius: f64, theta_min: f64, theta_max: f64) -> Result<Self, GeometryError> {
        check_finite(&[radius, theta_min, theta_max], "sector parameters")?;
        let span = theta_max - theta_min;
        if !(radius > 0.0 && span > 0.0 && span < TAU) {
            return Err(invalid("sector needs a positive radius and 0 < opening < 2π"));
        }
        let origin = [0.0, 0.0];
        let mut boundary = Boundary {
            pieces: vec![
                Piece::Arc { center: origin, radius, start: theta_min, span, orientation: 1.0 },
                Piece::Segment {
                    a: origin,
                    b: polar(radius, theta_min),
                    normal: [theta_min.sin(), -theta_min.cos()],
                },
                Piece::Segment {
                    a: origin,
                    b: polar(radius, theta_max),
                    normal: [-theta_max.sin(), theta_max.cos()],
                },
            ],
            vertices: Vec::new(),
        };
        boundary.add_corner(polar(radius, theta_min), &[0, 1]);
        boundary.add_corner(polar(radius, theta_max), &[0, 2]);
        // At an inside corner this is the Clarke normal cone; the proximal
        // normal cone there is {0}.
        boundary.add_corner(origin, &[1, 2]);
        let diameter = if span >= PI { 2.0 * radius } else { (2.0 * radius * (span / 2.0).sin()).max(radius) };
        let eta = if span > PI { 0.0 } else { f64::INFINITY };
        Ok(Domain {
            shape: Shape::PacManSector { radius, theta_min, theta_max },
            dim: 2,
            eta,
            diameter,
            max_norm: radius,
            boundary: Some(boundary),
        })
    }

    /// Replaces the declared prox-regularity constant.
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Prox-regularity constant; `+∞` for convex domains and `0` for the
    /// non-prox-regular sector.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `sup_{x ∈ Ω} |x|`.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    pub fn is_bounded(&self) -> bool {
        self.diameter.is_finite()
    }

    pub fn is_convex(&self) -> bool {
        matches!(
            self.shape,
            Shape::HalfSpace { .. } | Shape::Ball { .. } | Shape::Box { .. } | Shape::ConvexPolygon { .. }
        )
    }

    pub fn is_prox_regular(&self) -> bool {
        self.eta > 0.0
    }

    fn strictly_contains(&self, p: &[f64]) -> bool {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => dot(normal, p) <= *offset,
            Shape::Ball { center, radius } => super::dist(center, p) <= *radius,
            Shape::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi),
            Shape::ConvexPolygon { vertices } => {
                let k = vertices.len();
                (0..k).all(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
                })
            }
            Shape::AnnulusSector { inner_radius, outer_radius, theta_min, theta_max } => {
                let r = p[0].hypot(p[1]);
                r >= *inner_radius
                    && r <= *outer_radius
                    && angle_offset(p[1].atan2(p[0]), *theta_min) <= theta_max - theta_min
            }
            Shape::DiskWithBite { radius, bite_center, bite_radius } => {
                p[0].hypot(p[1]) <= *radius
                    && (p[0] - bite_center[0]).hypot(p[1] - bite_center[1]) >= *bite_radius
            }
            Shape::PacManSector { radius, theta_min, theta_max } => {
                let r = p[0].hypot(p[1]);
                r <= *radius && (r == 0.0 || angle_offset(p[1].atan2(p[0]), *theta_min) <= theta_max - theta_min)
            }
        }
    }

    /// Membership in the closed set, up to [`TOL_GEOM`] at the boundary.
    pub fn contains(&self, p: &[f64]) -> bool {
        assert_eq!(p.len(), self.dim, "point dimension does not match domain");
        if self.strictly_contains(p) {
            return true;
        }
        self.distance_outside(p) <= TOL_GEOM
    }

    /// Distance from an outside point to the set (zero inside).
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        if self.strictly_contains(p) {
            0.0
        } else {
            self.distance_outside(p)
        }
    }

    fn distance_outside(&self, p: &[f64]) -> f64 {
        match &self.boundary {
            Some(b) => b.nearest([p[0], p[1]]).distance,
            None => super::dist(&self.project_convex(p), p),
        }
    }

    fn project_convex(&self, p: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let excess = dot(normal, p) - offset;
                if excess > 0.0 {
                    p.iter().zip(normal).map(|(x, n)| x - excess * n).collect()
                } else {
                    p.to_vec()
                }
            }
            Shape::Ball { center, radius } => {
                let r = super::dist(p, center);
                if r > *radius {
                    center.iter().zip(p).map(|(c, x)| c + radius * (x - c) / r).collect()
                } else {
                    p.to_vec()
                }
            }
            Shape::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
                .collect(),
            _ => unreachable!("planar shapes project through their boundary"),
        }
    }

    /// Nearest point of the domain to `p`.
    pub fn project(&self, p: &[f64]) -> Projection {
        assert_eq!(p.len(), self.dim, "point dimension does not match domain");
        if self.strictly_contains(p) {
            return Projection { point: Point::new(p.to_vec()), ambiguous: false };
        }
        match &self.boundary {
            None => Projection { point: Point::new(self.project_convex(p)), ambiguous: false },
            Some(b) => {
                let n = b.nearest([p[0], p[1]]);
                if n.distance <= TOL_GEOM && !n.ambiguous {
                    // Already a member up to tolerance; leave it in place.
                    return Projection { point: Point::new(p.to_vec()), ambiguous: false };
                }
                Projection { point: Point::new(n.point.to_vec()), ambiguous: n.ambiguous }
            }
        }
    }

    pub fn project_point(&self, p: &[f64]) -> Point {
        self.project(p).point
    }

    /// Normal cone `N(Ω, x)` for `x ∈ Ω`.
    pub fn normal_cone(&self, x: &[f64]) -> Result<Cone, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::PointOutsideDomain(x.to_vec()));
        }
        Ok(match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                if dot(normal, x) >= offset - TOL_BOUNDARY {
                    Cone::ray(normal.clone())
                } else {
                    Cone::zero(self.dim)
                }
            }
            Shape::Ball { center, radius } => {
                let rel: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                if norm(&rel) >= radius - TOL_BOUNDARY {
                    Cone::ray(rel)
                } else {
                    Cone::zero(self.dim)
                }
            }
            Shape::Box { lower, upper } => {
                let active = |tol: f64| -> Vec<Vec<f64>> {
                    let mut dirs = Vec::new();
                    for k in 0..self.dim {
                        let mut e = vec![0.0; self.dim];
                        if x[k] >= upper[k] - tol {
                            e[k] = 1.0;
                            dirs.push(e);
                        } else if x[k] <= lower[k] + tol {
                            e[k] = -1.0;
                            dirs.push(e);
                        }
                    }
                    dirs
                };
                if active(TOL_BOUNDARY).is_empty() {
                    Cone::zero(self.dim)
                } else {
                    Cone::from_directions(self.dim, active(TOL_CORNER))
                }
            }
            _ => self.boundary.as_ref().expect("planar shape").normal_cone([x[0], x[1]]),
        })
    }

    /// Projection of `v` onto the tangent cone at `x`.
    pub fn project_tangent(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let cone = self.normal_cone(x)?;
        Ok(super::moreau_decompose(v, &cone).0)
    }

    /// Axis-aligned box enclosing the domain, if bounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.shape {
            Shape::HalfSpace { .. } => None,
            Shape::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Shape::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            Shape::ConvexPolygon { vertices } => {
                let lo = [0, 1].map(|k| vertices.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min));
                let hi = [0, 1].map(|k| vertices.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max));
                Some((lo.to_vec(), hi.to_vec()))
            }
            _ => {
                let r = self.max_norm;
                Some((vec![-r, -r], vec![r, r]))
            }
        }
    }

    /// Box used for rejection sampling. Unbounded domains use a window of
    /// half-width 5 around the projection of the origin.
    pub fn sampling_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.bounding_box().unwrap_or_else(|| {
            let c = self.project_point(&vec![0.0; self.dim]);
            (c.iter().map(|x| x - 5.0).collect(), c.iter().map(|x| x + 5.0).collect())
        })
    }

    /// Uniform sample from the domain within its sampling box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.sampling_box();
        loop {
            let p: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
            if self.contains(&p) {
                return Point::new(p);
            }
        }
    }

    /// Random boundary point; corners are drawn with positive probability.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let (lo, hi) = self.sampling_box();
                let p: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
                let excess = dot(normal, &p) - offset;
                Point::new(p.iter().zip(normal).map(|(x, n)| x - excess * n).collect())
            }
            Shape::Ball { center, radius } => {
                let dir: Vec<f64> = loop {
                    let g: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let n = norm(&g);
                    if n > 1e-3 && n <= 1.0 {
                        break g.iter().map(|c| c / n).collect();
                    }
                };
                Point::new(center.iter().zip(&dir).map(|(c, d)| c + radius * d).collect())
            }
            Shape::Box { lower, upper } => {
                let mut p: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
                let corner = rng.gen::<f64>() < 0.15;
                for k in 0..self.dim {
                    if corner {
                        p[k] = if rng.gen() { upper[k] } else { lower[k] };
                    }
                }
                if !corner {
                    let k = rng.gen_range(0..self.dim);
                    p[k] = if rng.gen() { upper[k] } else { lower[k] };
                }
                Point::new(p)
            }
            _ => {
                let q: P2 = self.boundary.as_ref().expect("planar shape").sample(rng);
                Point::new(q.to_vec())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn sharpness_sector(eps: f64) -> Domain {
        Domain::annulus_sector(1.0 - eps, 1.0, -eps, PI + eps).unwrap()
    }

    fn bite() -> Domain {
        Domain::disk_with_bite(1.0, [2.2, 0.0], 1.5).unwrap()
    }

    #[test]
    fn ball_membership() {
        let d = Domain::unit_disk();
        assert!(d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[2.0, 0.0]));
        assert!(d.contains(&[1.0 + 5e-13, 0.0]));
        assert!(!d.contains(&[1.0 + 1e-9, 0.0]));
    }

    #[test]
    fn annulus_sector_membership() {
        let d = sharpness_sector(0.1);
        let p = polar(0.95, PI / 2.0);
        assert!(d.contains(&p));
        assert!(!d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&polar(0.95, -PI / 2.0)));
        // Just inside the lower end of the angular range.
        assert!(d.contains(&polar(0.95, -0.099)));
        assert!(!d.contains(&polar(0.95, -0.11)));
    }

    #[test]
    fn simple_projections() {
        let d = Domain::unit_disk();
        assert!(close(&d.project_point(&[2.0, 0.0]), &[1.0, 0.0], 1e-15));
        let h = Domain::half_space(vec![1.0, 0.0], 0.0).unwrap();
        assert!(close(&h.project_point(&[3.0, 5.0]), &[0.0, 5.0], 1e-15));
        let b = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(close(&b.project_point(&[3.0, -0.5]), &[1.0, -0.5], 1e-15));
    }

    #[test]
    fn projection_is_idempotent_on_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [bite(), sharpness_sector(0.1), Domain::unit_disk()] {
            for _ in 0..200 {
                let x = d.sample_interior(&mut rng);
                assert_eq!(d.project_point(&x), x);
            }
        }
    }

    #[test]
    fn bite_projection_matches_dense_boundary_argmin() {
        let d = bite();
        // Just inside the removed disk, near its arc.
        let p = [0.72, 0.05];
        assert!(!d.contains(&p));
        let proj = d.project(&p);
        assert!(!proj.ambiguous);
        let q = proj.point;
        let c = [2.2, 0.0];
        assert!(((q[0] - c[0]).hypot(q[1] - c[1]) - 1.5).abs() < 1e-12);

        // Dense sampling of both circles, keeping members only.
        let mut best = f64::INFINITY;
        let mut arg = [0.0, 0.0];
        let samples = 200_000;
        for k in 0..samples {
            let t = TAU * k as f64 / samples as f64;
            for cand in [polar(1.0, t), [c[0] + 1.5 * t.cos(), c[1] + 1.5 * t.sin()]] {
                if d.contains(&cand) {
                    let dd = (cand[0] - p[0]).hypot(cand[1] - p[1]);
                    if dd < best {
                        best = dd;
                        arg = cand;
                    }
                }
            }
        }
        assert!(close(&q, &arg, 1e-4), "{q:?} vs {arg:?}");
        assert!(((q[0] - p[0]).hypot(q[1] - p[1]) - best).abs() < 1e-9);
    }

    #[test]
    fn bite_geometry_constants() {
        let d = bite();
        assert_eq!(d.eta(), 1.5);
        assert!((d.diameter() - 2.0).abs() < 1e-15);
        assert!(d.is_bounded());
        assert!(!d.is_convex());
    }

    #[test]
    fn sharpness_sector_eta_is_half_the_corner_gap() {
        let eps = 0.1;
        let d = sharpness_sector(eps);
        let x1 = [-(1.0 - eps) * eps.cos(), -(1.0 - eps) * eps.sin()];
        let x2 = [(1.0 - eps) * eps.cos(), -(1.0 - eps) * eps.sin()];
        let half_gap = (x1[0] - x2[0]).hypot(x1[1] - x2[1]) / 2.0;
        assert!((d.eta() - half_gap).abs() < 1e-14);
        assert!(d.eta() > 1.0 - 2.0 * eps);
        assert!((d.diameter() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn normal_cones() {
        let d = Domain::unit_disk();
        let c = d.normal_cone(&[1.0, 0.0]).unwrap();
        assert_eq!(c.generators(), &[vec![1.0, 0.0]]);
        assert!(d.normal_cone(&[0.0, 0.0]).unwrap().is_zero());
        assert!(matches!(d.normal_cone(&[3.0, 0.0]), Err(GeometryError::PointOutsideDomain(_))));

        let b = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let c = b.normal_cone(&[1.0, 1.0]).unwrap();
        assert_eq!(c.generators().len(), 2);
        assert!(c.generators().contains(&vec![1.0, 0.0]));
        assert!(c.generators().contains(&vec![0.0, 1.0]));
        // Within the corner tolerance of the vertex.
        let c = b.normal_cone(&[1.0, 1.0 - 5e-10]).unwrap();
        assert_eq!(c.generators().len(), 2);
    }

    #[test]
    fn box_corner_cone_agrees_with_proximal_definition() {
        // For unit v in the fan, x is the projection of x + αv.
        let b = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let x = [1.0, 1.0];
        let cone = b.normal_cone(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let v = cone.sample_unit(&mut rng).unwrap();
            let alpha = rng.gen_range(0.01..3.0);
            let y = [x[0] + alpha * v[0], x[1] + alpha * v[1]];
            assert!(close(&b.project_point(&y), &x, 1e-12));
        }
        // A direction outside the fan is not a proximal normal.
        let y = [1.0 + 0.5, 1.0 - 0.5];
        assert!(!close(&b.project_point(&y), &x, 1e-3));
    }

    #[test]
    fn tangent_projection_examples() {
        let d = Domain::unit_disk();
        assert_eq!(d.project_tangent(&[0.2, 0.1], &[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
        assert!(close(&d.project_tangent(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), &[0.0, 1.0], 1e-15));
        assert!(close(&d.project_tangent(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), &[-1.0, 0.0], 1e-15));
    }

    #[test]
    fn pac_man_projection_ties_break_lexicographically() {
        let d = Domain::pac_man_sector(1.0, PI / 4.0, 7.0 * PI / 4.0).unwrap();
        assert!(!d.is_prox_regular());
        let proj = d.project(&[0.5, 0.0]);
        assert!(proj.ambiguous);
        assert!(close(&proj.point, &[0.25, -0.25], 1e-15));
        // Off the bisector the projection is unique.
        let proj = d.project(&[0.5, 1e-6]);
        assert!(!proj.ambiguous);
        assert!(proj.point[1] > 0.0);
    }

    #[test]
    fn polygon_projection_and_cone() {
        let d = Domain::convex_polygon(vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        assert!(d.contains(&[0.5, 0.5]));
        assert!(close(&d.project_point(&[2.0, 2.0]), &[1.0, 1.0], 1e-15));
        let c = d.normal_cone(&[0.0, 0.0]).unwrap();
        assert_eq!(c.generators().len(), 2);
        let c = d.normal_cone(&[1.0, 0.0]).unwrap();
        assert!(close(&c.generators()[0], &[0.0, -1.0], 1e-15));
        // Clockwise input is reoriented.
        let cw = Domain::convex_polygon(vec![[0.0, 0.0], [0.0, 2.0], [2.0, 0.0]]).unwrap();
        assert!(cw.contains(&[0.5, 0.5]));
        assert!(Domain::convex_polygon(vec![[0.0, 0.0], [2.0, 0.0], [0.5, 0.5], [0.0, 2.0]]).is_err());
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(Domain::ball(vec![0.0], -1.0).is_err());
        assert!(Domain::cuboid(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(Domain::annulus_sector(1.0, 0.5, 0.0, 1.0).is_err());
        assert!(Domain::disk_with_bite(1.0, [0.0, 0.0], 2.0).is_err());
        assert!(Domain::half_space(vec![0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [bite(), sharpness_sector(0.2), Domain::unit_disk(), Domain::half_space(vec![1.0, 1.0], 0.5).unwrap()] {
            for _ in 0..500 {
                let x = d.sample_boundary(&mut rng);
                assert!(d.contains(&x));
                assert!(!d.normal_cone(&x).unwrap().is_zero(), "{x:?}");
            }
        }
    }
}
