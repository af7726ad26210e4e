//! Empirical measures `μ = Σ m_i δ_{x_i}` on a domain, with the
//! interaction energy, the velocity field and the dissipation.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{dot, Domain, GeometryError, Point};
use crate::potentials::Potential;

pub const MASS_TOL: f64 = 1e-12;

// Below this many particles the pairwise sum runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 256;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("masses sum to {0}, expected 1")]
    MassNotNormalized(f64),
    #[error("mass {0} is not positive and finite")]
    InvalidMass(f64),
    #[error("measure has no particles")]
    EmptySample,
    #[error("positions have {got} coordinates, expected a multiple of {dim}")]
    DimensionMismatch { dim: usize, got: usize },
    #[error("particle {index} at {point:?} lies outside the domain")]
    OutsideDomain { index: usize, point: Vec<f64> },
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMeasure {
    dim: usize,
    positions: Vec<f64>,
    masses: Vec<f64>,
}

impl ParticleMeasure {
    pub fn new(dim: usize, positions: Vec<f64>, masses: Vec<f64>) -> Result<Self, MeasureError> {
        if masses.is_empty() {
            return Err(MeasureError::EmptySample);
        }
        if dim == 0 || positions.len() != dim * masses.len() {
            return Err(MeasureError::DimensionMismatch { dim, got: positions.len() });
        }
        if let Some(&m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(MeasureError::InvalidMass(m));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassNotNormalized(total));
        }
        Ok(ParticleMeasure { dim, positions, masses })
    }

    pub fn from_points(points: &[Point], masses: Vec<f64>) -> Result<Self, MeasureError> {
        let dim = points.first().map(Point::dim).ok_or(MeasureError::EmptySample)?;
        if points.len() != masses.len() {
            return Err(MeasureError::InvalidRecipe("one mass per point required".into()));
        }
        let mut positions = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(MeasureError::DimensionMismatch { dim, got: p.dim() });
            }
            positions.extend_from_slice(p);
        }
        Self::new(dim, positions, masses)
    }

    /// Equal masses `1/n`.
    pub fn uniform(points: &[Point]) -> Result<Self, MeasureError> {
        let n = points.len();
        if n == 0 {
            return Err(MeasureError::EmptySample);
        }
        Self::from_points(points, vec![1.0 / n as f64; n])
    }

    pub fn dirac(x: Point) -> Self {
        let dim = x.dim();
        ParticleMeasure { dim, positions: x.into_vec(), masses: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.positions.chunks_exact(self.dim).zip(self.masses.iter().copied())
    }

    /// Same masses, new positions.
    pub fn with_positions(&self, positions: Vec<f64>) -> Self {
        assert_eq!(positions.len(), self.positions.len());
        ParticleMeasure { dim: self.dim, positions, masses: self.masses.clone() }
    }

    pub fn center_of_mass(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for (x, m) in self.iter() {
            for (ck, xk) in c.iter_mut().zip(x) {
                *ck += m * xk;
            }
        }
        c
    }

    pub fn support_radius(&self) -> f64 {
        self.positions
            .chunks_exact(self.dim)
            .map(crate::geometry::norm)
            .fold(0.0, f64::max)
    }

    pub fn check_support(&self, domain: &Domain) -> Result<(), MeasureError> {
        for (i, x) in self.positions.chunks_exact(self.dim).enumerate() {
            if !domain.contains(x) {
                return Err(MeasureError::OutsideDomain { index: i, point: x.to_vec() });
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MeasureError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.push("mass".into());
        w.write_record(&header)?;
        for (x, m) in self.iter() {
            let mut rec: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
            rec.push(format!("{m:e}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `x1,…,xd,mass` rows. Masses are renormalised when
    /// `normalize` is set; otherwise they must already sum to one.
    pub fn read_csv(path: &Path, normalize: bool) -> Result<Self, MeasureError> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.len() < 2 || headers.get(headers.len() - 1).map(str::trim) != Some("mass") {
            return Err(MeasureError::MalformedCsv("expected header x1,…,xd,mass".into()));
        }
        let dim = headers.len() - 1;
        let mut positions = Vec::new();
        let mut masses = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| MeasureError::MalformedCsv(format!("{s:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            positions.extend_from_slice(&vals[..dim]);
            masses.push(vals[dim]);
        }
        if normalize {
            let total: f64 = masses.iter().sum();
            if total > 0.0 {
                masses.iter_mut().for_each(|m| *m /= total);
            }
        }
        Self::new(dim, positions, masses)
    }
}

/// `E(μ) = ½ ΣΣ m_i m_j W(x_i − x_j) + Σ m_i V(x_i)`.
pub fn energy(mu: &ParticleMeasure, w: &Potential, v: &Potential, t: f64) -> f64 {
    let d = mu.dim();
    let mut diff = vec![0.0; d];
    let mut interaction = 0.0;
    if !w.is_zero() {
        for (xi, mi) in mu.iter() {
            for (xj, mj) in mu.iter() {
                for k in 0..d {
                    diff[k] = xi[k] - xj[k];
                }
                interaction += mi * mj * w.value(t, &diff);
            }
        }
    }
    let external: f64 = mu.iter().map(|(x, m)| m * v.value(t, x)).sum();
    0.5 * interaction + external
}

/// `v_i = −Σ_j m_j ∇W(x_i − x_j) − ∇V(x_i)`, flattened like the positions.
/// The `j = i` term is kept; it vanishes for even potentials.
pub fn velocity_field(mu: &ParticleMeasure, w: &Potential, v: &Potential, t: f64) -> Vec<f64> {
    let d = mu.dim();
    let mut out = vec![0.0; mu.positions().len()];
    let fill = |(xi, vi): (&[f64], &mut [f64])| {
        if !w.is_zero() {
            let mut diff = vec![0.0; d];
            for (xj, mj) in mu.iter() {
                for k in 0..d {
                    diff[k] = xi[k] - xj[k];
                }
                w.accumulate_gradient(t, &diff, -mj, vi);
            }
        }
        v.accumulate_gradient(t, xi, -1.0, vi);
    };
    if mu.len() >= PARALLEL_THRESHOLD && !w.is_zero() {
        mu.positions().par_chunks_exact(d).zip(out.par_chunks_exact_mut(d)).for_each(fill);
    } else {
        mu.positions().chunks_exact(d).zip(out.chunks_exact_mut(d)).for_each(fill);
    }
    out
}

/// Tangential projections `P_{x_i}(v_i)` of the velocity field.
pub fn tangential_velocity(
    mu: &ParticleMeasure,
    domain: &Domain,
    w: &Potential,
    v: &Potential,
    t: f64,
) -> Result<Vec<f64>, MeasureError> {
    let d = mu.dim();
    let vel = velocity_field(mu, w, v, t);
    let mut out = Vec::with_capacity(vel.len());
    for (x, vi) in mu.positions().chunks_exact(d).zip(vel.chunks_exact(d)) {
        out.extend(domain.project_tangent(x, vi)?);
    }
    Ok(out)
}

/// `Σ m_i |P_{x_i}(v_i)|²`.
pub fn dissipation(
    mu: &ParticleMeasure,
    domain: &Domain,
    w: &Potential,
    v: &Potential,
    t: f64,
) -> Result<f64, MeasureError> {
    let d = mu.dim();
    let tv = tangential_velocity(mu, domain, w, v, t)?;
    Ok(tv.chunks_exact(d).zip(mu.masses()).map(|(u, m)| m * dot(u, u)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialRecipe {
    /// Cell centres of a uniform grid with `cells` divisions per axis over
    /// the domain's sampling box, kept when inside the domain.
    Grid { cells: usize },
    /// `count` seeded uniform samples from the domain, optionally restricted
    /// to the centred ball of radius `within_radius`.
    UniformRandom { count: usize, within_radius: Option<f64> },
    /// Explicit points with the given (or uniform) masses.
    Explicit { points: Vec<Vec<f64>>, masses: Option<Vec<f64>> },
}

pub fn discretize_initial(domain: &Domain, recipe: &InitialRecipe, seed: u64) -> Result<ParticleMeasure, MeasureError> {
    let dim = domain.dim();
    let (points, masses): (Vec<Point>, Option<Vec<f64>>) = match recipe {
        InitialRecipe::Grid { cells } => {
            if *cells == 0 {
                return Err(MeasureError::InvalidRecipe("grid needs at least one cell".into()));
            }
            let (lo, hi) = domain.sampling_box();
            let total = cells.pow(dim as u32);
            let mut pts = Vec::new();
            for idx in 0..total {
                let mut rem = idx;
                let mut p = vec![0.0; dim];
                for k in 0..dim {
                    let c = rem % cells;
                    rem /= cells;
                    p[k] = lo[k] + (c as f64 + 0.5) * (hi[k] - lo[k]) / *cells as f64;
                }
                if domain.contains(&p) {
                    pts.push(Point::new(p));
                }
            }
            (pts, None)
        }
        InitialRecipe::UniformRandom { count, within_radius } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = Vec::with_capacity(*count);
            if let Some(r) = within_radius {
                if !(*r > 0.0) || domain.distance_to(&vec![0.0; dim]) >= *r {
                    return Err(MeasureError::InvalidRecipe(format!("ball of radius {r} misses the domain")));
                }
            }
            while pts.len() < *count {
                let p = domain.sample_interior(&mut rng);
                if within_radius.is_none_or(|r| crate::geometry::norm(&p) <= r) {
                    pts.push(p);
                }
            }
            (pts, None)
        }
        InitialRecipe::Explicit { points, masses } => {
            let pts: Vec<Point> = points.iter().cloned().map(Point::new).collect();
            if let Some(p) = pts.iter().find(|p| p.dim() != dim) {
                return Err(MeasureError::DimensionMismatch { dim, got: p.dim() });
            }
            (pts, masses.clone())
        }
    };
    if points.is_empty() {
        return Err(MeasureError::EmptySample);
    }
    let mu = match masses {
        Some(m) => ParticleMeasure::from_points(&points, m)?,
        None => ParticleMeasure::uniform(&points)?,
    };
    mu.check_support(domain)?;
    Ok(mu)
}
