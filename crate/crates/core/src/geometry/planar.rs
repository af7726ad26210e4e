//! Piecewise boundaries of planar domains: straight segments and circular
//! arcs joined at corners.

use std::f64::consts::TAU;

use rand::Rng;

use super::{Cone, TOL_BOUNDARY, TOL_CORNER, TOL_GEOM};

pub(crate) type P2 = [f64; 2];

#[inline]
pub(crate) fn polar(r: f64, theta: f64) -> P2 {
    [r * theta.cos(), r * theta.sin()]
}

#[inline]
fn d2(a: P2, b: P2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Angle of `theta` measured counter-clockwise from `start`, in `[0, 2π)`.
#[inline]
pub(crate) fn angle_offset(theta: f64, start: f64) -> f64 {
    (theta - start).rem_euclid(TAU)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Piece {
    Segment {
        a: P2,
        b: P2,
        /// Outward unit normal.
        normal: P2,
    },
    Arc {
        center: P2,
        radius: f64,
        start: f64,
        span: f64,
        /// +1 when the domain lies inside the circle, -1 when outside.
        orientation: f64,
    },
}

impl Piece {
    pub(crate) fn length(&self) -> f64 {
        match self {
            Piece::Segment { a, b, .. } => d2(*a, *b),
            Piece::Arc { radius, span, .. } => radius * span,
        }
    }

    fn point_at(&self, s: f64) -> P2 {
        match *self {
            Piece::Segment { a, b, .. } => [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            Piece::Arc { center, radius, start, span, .. } => {
                let q = polar(radius, start + s * span);
                [center[0] + q[0], center[1] + q[1]]
            }
        }
    }

    pub(crate) fn outward_normal(&self, q: P2) -> P2 {
        match *self {
            Piece::Segment { normal, .. } => normal,
            Piece::Arc { center, radius, orientation, .. } => [
                orientation * (q[0] - center[0]) / radius,
                orientation * (q[1] - center[1]) / radius,
            ],
        }
    }

    /// Nearest points of the piece to `p`. More than one point is returned
    /// only for genuine ties (the centre of an arc, or equidistant arc ends).
    fn closest(&self, p: P2, out: &mut Vec<P2>) {
        match *self {
            Piece::Segment { a, b, .. } => {
                let e = [b[0] - a[0], b[1] - a[1]];
                let len2 = e[0] * e[0] + e[1] * e[1];
                let s = if len2 > 0.0 {
                    (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                out.push([a[0] + s * e[0], a[1] + s * e[1]]);
            }
            Piece::Arc { center, radius, start, span, .. } => {
                let rel = [p[0] - center[0], p[1] - center[1]];
                let r = rel[0].hypot(rel[1]);
                if r <= f64::MIN_POSITIVE {
                    out.push(self.point_at(0.0));
                    out.push(self.point_at(0.5));
                    return;
                }
                let theta = rel[1].atan2(rel[0]);
                if span >= TAU || angle_offset(theta, start) <= span {
                    out.push([
                        center[0] + radius * rel[0] / r,
                        center[1] + radius * rel[1] / r,
                    ]);
                } else {
                    let e0 = self.point_at(0.0);
                    let e1 = self.point_at(1.0);
                    let (da, db) = (d2(e0, p), d2(e1, p));
                    if (da - db).abs() <= TOL_GEOM {
                        out.push(e0);
                        out.push(e1);
                    } else if da < db {
                        out.push(e0);
                    } else {
                        out.push(e1);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Vertex {
    pub pos: P2,
    pub normals: Vec<P2>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Boundary {
    pub pieces: Vec<Piece>,
    pub vertices: Vec<Vertex>,
}

/// Result of a nearest-boundary query.
pub(crate) struct Nearest {
    pub point: P2,
    pub distance: f64,
    pub ambiguous: bool,
}

impl Boundary {
    /// Adds a corner at `pos` whose normals are those of the pieces meeting
    /// there.
    pub(crate) fn add_corner(&mut self, pos: P2, piece_ids: &[usize]) {
        let normals = piece_ids
            .iter()
            .map(|&i| self.pieces[i].outward_normal(pos))
            .collect();
        self.vertices.push(Vertex { pos, normals });
    }

    pub(crate) fn nearest(&self, p: P2) -> Nearest {
        let mut cands: Vec<P2> = Vec::with_capacity(self.pieces.len() + 2);
        for piece in &self.pieces {
            piece.closest(p, &mut cands);
        }
        let dists: Vec<f64> = cands.iter().map(|c| d2(*c, p)).collect();
        let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = TOL_GEOM * best.max(1.0);
        let mut tied: Vec<P2> = cands
            .iter()
            .zip(&dists)
            .filter(|(_, &d)| d <= best + tol)
            .map(|(c, _)| *c)
            .collect();
        tied.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let first = tied[0];
        let ambiguous = tied.iter().any(|c| d2(*c, first) > TOL_CORNER);
        let point = if ambiguous {
            first
        } else {
            // Prefer the exact minimiser among coincident candidates.
            let (i, _) = dists
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("boundary has at least one piece");
            cands[i]
        };
        Nearest { point, distance: best, ambiguous }
    }

    pub(crate) fn normal_cone(&self, x: P2) -> Cone {
        for v in &self.vertices {
            if d2(v.pos, x) <= TOL_CORNER {
                return Cone::from_directions(2, v.normals.iter().map(|n| n.to_vec()));
            }
        }
        let mut dirs = Vec::new();
        let mut cands = Vec::new();
        for piece in &self.pieces {
            cands.clear();
            piece.closest(x, &mut cands);
            if let Some(q) = cands.first() {
                if d2(*q, x) <= TOL_BOUNDARY {
                    dirs.push(piece.outward_normal(*q).to_vec());
                }
            }
        }
        Cone::from_directions(2, dirs)
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> P2 {
        if !self.vertices.is_empty() && rng.gen::<f64>() < 0.15 {
            return self.vertices[rng.gen_range(0..self.vertices.len())].pos;
        }
        let total: f64 = self.pieces.iter().map(Piece::length).sum();
        let mut u = rng.gen::<f64>() * total;
        for piece in &self.pieces {
            let l = piece.length();
            if u <= l && l > 0.0 {
                return piece.point_at(u / l);
            }
            u -= l;
        }
        let last = self.pieces.last().expect("boundary has at least one piece");
        last.point_at(rng.gen())
    }
}
