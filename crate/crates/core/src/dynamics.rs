//! Time stepping of the projected particle system.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Domain, GeometryError, Shape};
use crate::measures::{dissipation, energy, velocity_field, MeasureError, ParticleMeasure};
use crate::potentials::{contraction_exponent, Potential, PotentialError};
use crate::transport::{distance_to_singletons, wasserstein2_distance, TransportError};

pub const DT_CAP: f64 = 0.1;
pub const DT_NONREGULAR: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("dt = {dt} exceeds the safe step {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("particle {index} left the domain by {distance:e} at step {step}")]
    FeasibilityBreach { step: usize, index: usize, distance: f64 },
    #[error("support radius {radius} exceeds the a-priori bound {bound} at t = {t}")]
    SupportBoundExceeded { t: f64, radius: f64, bound: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// `x⁺ = proj_Ω(x + dt·v)`.
    #[default]
    CatchingUp,
    /// `x⁺ = proj_Ω(x + dt·P_x(v))`.
    ProjectedEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64, record_every: usize) -> Self {
        SchemeConfig { scheme, dt, t_end, record_every }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Same configuration with `dt` halved and the record spacing in time kept.
    pub fn halved(&self) -> Self {
        SchemeConfig { dt: self.dt / 2.0, record_every: self.record_every * 2, ..self.clone() }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub measure: ParticleMeasure,
    pub step_count: usize,
    /// Projections so far that hit a tie between distinct nearest points.
    pub ambiguous_projections: usize,
}

impl SimState {
    pub fn new(measure: ParticleMeasure) -> Self {
        SimState { time: 0.0, measure, step_count: 0, ambiguous_projections: 0 }
    }
}

/// `min(0.1, η / (2·B))` with `B` the gradient bound of W on the ball of
/// radius `2r` plus that of V on the ball of radius `r`.
pub fn step_size_limit(eta: f64, velocity_bound: f64) -> f64 {
    if eta.is_infinite() || velocity_bound <= 0.0 {
        return DT_CAP;
    }
    DT_CAP.min(eta / (2.0 * velocity_bound))
}

pub fn step_size_safety(domain: &Domain, w: &Potential, v: &Potential, r_support: f64) -> f64 {
    if matches!(domain.shape(), Shape::PacManSector { .. }) || !domain.is_prox_regular() {
        eprintln!("warning: domain is not prox-regular; using the fixed step {DT_NONREGULAR}");
        return DT_NONREGULAR;
    }
    let bound = w.grad_sup_bound(2.0 * r_support) + v.grad_sup_bound(r_support);
    step_size_limit(domain.eta(), bound)
}

fn advance(
    state: &SimState,
    dt: f64,
    domain: &Domain,
    w: &Potential,
    v: &Potential,
    tangential: bool,
) -> Result<SimState, DynamicsError> {
    let mu = &state.measure;
    let d = mu.dim();
    let vel = velocity_field(mu, w, v, state.time);
    let mut next = Vec::with_capacity(vel.len());
    let mut ambiguous = 0;
    for (x, vi) in mu.positions().chunks_exact(d).zip(vel.chunks_exact(d)) {
        let dir = if tangential { domain.project_tangent(x, vi)? } else { vi.to_vec() };
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + dt * b).collect();
        let p = domain.project(&y);
        ambiguous += p.ambiguous as usize;
        next.extend_from_slice(&p.point);
    }
    Ok(SimState {
        time: state.time + dt,
        measure: mu.with_positions(next),
        step_count: state.step_count + 1,
        ambiguous_projections: state.ambiguous_projections + ambiguous,
    })
}

pub fn catching_up_step(state: &SimState, dt: f64, domain: &Domain, w: &Potential, v: &Potential) -> Result<SimState, DynamicsError> {
    advance(state, dt, domain, w, v, false)
}

pub fn projected_euler_step(state: &SimState, dt: f64, domain: &Domain, w: &Potential, v: &Potential) -> Result<SimState, DynamicsError> {
    advance(state, dt, domain, w, v, true)
}

pub fn step(state: &SimState, scheme: Scheme, dt: f64, domain: &Domain, w: &Potential, v: &Potential) -> Result<SimState, DynamicsError> {
    match scheme {
        Scheme::CatchingUp => catching_up_step(state, dt, domain, w, v),
        Scheme::ProjectedEuler => projected_euler_step(state, dt, domain, w, v),
    }
}

/// `(r₀ + 1)·e^{Ct}`.
pub fn support_radius_bound(r0: f64, c: f64, t: f64) -> f64 {
    (r0 + 1.0) * (c * t).exp()
}

/// Growth constant `C = 2c_W + c_V` from the linear-growth constants
/// `|∇f(x)| ≤ c(1 + |x|)`.
pub fn support_growth_constant(w: &Potential, v: &Potential) -> Result<f64, PotentialError> {
    let missing = |name: &str| PotentialError::InvalidParameter {
        name: name.into(),
        reason: "gradient does not grow at most linearly".into(),
    };
    let cw = w.linear_growth_constant().ok_or_else(|| missing("W"))?;
    let cv = v.linear_growth_constant().ok_or_else(|| missing("V"))?;
    Ok(2.0 * cw + cv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub measure: ParticleMeasure,
    pub energy: f64,
    pub dissipation: f64,
    pub dw_singleton: f64,
    pub support_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub steps: usize,
    pub ambiguous_projections: usize,
    /// A-priori support bound `(C, r₀)` enforced on unbounded domains.
    pub support_bound: Option<(f64, f64)>,
}

impl Trajectory {
    pub fn final_record(&self) -> &Record {
        self.records.last().expect("trajectory has at least the initial record")
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn series(&self, f: impl Fn(&Record) -> f64) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }

    /// Largest displacement of any particle from its initial position.
    pub fn max_displacement(&self) -> f64 {
        let first = &self.records[0].measure;
        let d = first.dim();
        self.records
            .iter()
            .flat_map(|r| {
                r.measure
                    .positions()
                    .chunks_exact(d)
                    .zip(first.positions().chunks_exact(d))
                    .map(|(a, b)| crate::geometry::dist(a, b))
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "energy", "dissipation", "dw_singleton", "support_radius"])?;
        for r in &self.records {
            w.write_record([r.t, r.energy, r.dissipation, r.dw_singleton, r.support_radius].map(|x| format!("{x:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// One `snapshot_NNNNN.csv` per record.
    pub fn write_snapshots(&self, dir: &Path) -> Result<(), MeasureError> {
        std::fs::create_dir_all(dir)?;
        for (k, r) in self.records.iter().enumerate() {
            r.measure.write_csv(&dir.join(format!("snapshot_{k:05}.csv")))?;
        }
        Ok(())
    }
}

fn record(state: &SimState, domain: &Domain, w: &Potential, v: &Potential) -> Result<Record, DynamicsError> {
    let mu = &state.measure;
    Ok(Record {
        t: state.time,
        measure: mu.clone(),
        energy: energy(mu, w, v, state.time),
        dissipation: dissipation(mu, domain, w, v, state.time)?,
        dw_singleton: distance_to_singletons(mu).0,
        support_radius: mu.support_radius(),
    })
}

fn check_feasible(state: &SimState, domain: &Domain) -> Result<(), DynamicsError> {
    let mu = &state.measure;
    for (i, x) in mu.positions().chunks_exact(mu.dim()).enumerate() {
        if !domain.contains(x) {
            return Err(DynamicsError::FeasibilityBreach {
                step: state.step_count,
                index: i,
                distance: domain.distance_to(x),
            });
        }
    }
    Ok(())
}

/// Integrates from `initial` up to `t_end`, recording every
/// `record_every` steps and at the final step. Times are `k·dt`.
pub fn simulate(
    initial: &ParticleMeasure,
    cfg: &SchemeConfig,
    domain: &Domain,
    w: &Potential,
    v: &Potential,
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    initial.check_support(domain)?;

    let support_bound = if domain.is_bounded() {
        None
    } else {
        Some((support_growth_constant(w, v)?, initial.support_radius()))
    };
    let r_support = match support_bound {
        None => domain.max_norm(),
        Some((c, r0)) => support_radius_bound(r0, c, cfg.t_end),
    };
    let limit = step_size_safety(domain, w, v, r_support);
    if cfg.dt > limit * (1.0 + 1e-12) {
        return Err(DynamicsError::StepTooLarge { dt: cfg.dt, limit });
    }

    let steps = cfg.steps();
    let mut state = SimState::new(initial.clone());
    let mut records = vec![record(&state, domain, w, v)?];
    for k in 1..=steps {
        let mut next = step(&state, cfg.scheme, cfg.dt, domain, w, v)?;
        next.time = k as f64 * cfg.dt;
        check_feasible(&next, domain)?;
        state = next;
        if k % cfg.record_every == 0 || k == steps {
            let rec = record(&state, domain, w, v)?;
            if let Some((c, r0)) = support_bound {
                let bound = support_radius_bound(r0, c, rec.t);
                if rec.support_radius > bound {
                    return Err(DynamicsError::SupportBoundExceeded { t: rec.t, radius: rec.support_radius, bound });
                }
            }
            records.push(rec);
        }
    }
    Ok(Trajectory { records, steps, ambiguous_projections: state.ambiguous_projections, support_bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub envelope: Vec<f64>,
    pub kappa: f64,
    /// Largest `measured / envelope` over records with positive envelope.
    pub max_ratio: f64,
    pub violated: bool,
}

pub const STABILITY_SLACK: f64 = 1e-2;

/// Runs both initial measures under the same configuration and compares
/// `d_W(μ¹(t), μ²(t))` with `e^{κt}·d_W(μ¹₀, μ²₀)`.
pub fn stability_experiment(
    mu1: &ParticleMeasure,
    mu2: &ParticleMeasure,
    cfg: &SchemeConfig,
    domain: &Domain,
    w: &Potential,
    v: &Potential,
) -> Result<StabilityReport, DynamicsError> {
    let kappa = contraction_exponent(w, v, domain)?;
    let (t1, t2) = std::thread::scope(|s| {
        let h1 = s.spawn(|| simulate(mu1, cfg, domain, w, v));
        let h2 = s.spawn(|| simulate(mu2, cfg, domain, w, v));
        (h1.join().expect("simulation thread panicked"), h2.join().expect("simulation thread panicked"))
    });
    let (t1, t2) = (t1?, t2?);
    let distances: Vec<f64> = t1
        .records
        .par_iter()
        .zip(t2.records.par_iter())
        .map(|(a, b)| wasserstein2_distance(&a.measure, &b.measure))
        .collect::<Result<_, _>>()?;
    let times = t1.times();
    let d0 = distances[0];
    let envelope: Vec<f64> = times.iter().map(|t| (kappa * t).exp() * d0).collect();
    let mut max_ratio = 0.0f64;
    let mut violated = false;
    for (d, e) in distances.iter().zip(&envelope) {
        if *e > 0.0 {
            max_ratio = max_ratio.max(d / e);
        }
        if *d > e * (1.0 + STABILITY_SLACK) + 1e-12 {
            violated = true;
        }
    }
    Ok(StabilityReport { times, distances, envelope, kappa, max_ratio, violated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn single(x: [f64; 2]) -> ParticleMeasure {
        ParticleMeasure::dirac(Point::from(x))
    }

    #[test]
    fn safety_examples() {
        let d = Domain::unit_disk();
        assert_eq!(step_size_safety(&d, &Potential::quadratic(), &Potential::Zero, 1.0), 0.1);
        assert_eq!(step_size_limit(1.5, 2.0), 0.1);
        assert!((step_size_limit(0.05, 2.0) - 0.0125).abs() < 1e-15);
        let pac = Domain::pac_man_sector(1.0, std::f64::consts::FRAC_PI_4, 7.0 * std::f64::consts::FRAC_PI_4).unwrap();
        assert_eq!(step_size_safety(&pac, &Potential::quadratic(), &Potential::Zero, 1.0), DT_NONREGULAR);
    }

    #[test]
    fn boundary_particle_pushed_outward_stays() {
        let d = Domain::unit_disk();
        let s = SimState::new(single([1.0, 0.0]));
        let v = Potential::linear_drift(vec![-1.0, 0.0]);
        let n = catching_up_step(&s, 0.1, &d, &Potential::Zero, &v).unwrap();
        assert_eq!(n.measure.position(0), &[1.0, 0.0]);
        assert!((n.time - 0.1).abs() < 1e-15);
        assert_eq!(n.step_count, 1);
    }

    #[test]
    fn interior_schemes_agree() {
        let d = Domain::unit_disk();
        let s = SimState::new(single([0.1, 0.2]));
        let v = Potential::quadratic();
        let a = catching_up_step(&s, 0.01, &d, &Potential::Zero, &v).unwrap();
        let b = projected_euler_step(&s, 0.01, &d, &Potential::Zero, &v).unwrap();
        assert_eq!(a, b);
        assert!((a.measure.position(0)[0] - 0.099).abs() < 1e-15);
    }

    #[test]
    fn sliding_on_circle_tracks_geodesic() {
        // Velocity (1, 1) at (1, 0): the tangential part (0, 1) drives the
        // particle along the circle at unit angular speed while the normal
        // part is cancelled.
        let d = Domain::unit_disk();
        let dt = 1e-3;
        let mut s = SimState::new(single([1.0, 0.0]));
        let drift = Potential::linear_drift(vec![0.0, -1.0]);
        for _ in 0..200 {
            s = projected_euler_step(&s, dt, &d, &Potential::Zero, &drift).unwrap();
            let p = s.measure.position(0);
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
        // Exact sliding solution: θ' = cos θ (tangential component of e₂).
        let theta_exact = (0.2f64.tanh()).asin();
        let p = s.measure.position(0);
        assert!((p[1].atan2(p[0]) - theta_exact).abs() < 5e-3);
    }

    #[test]
    fn single_particle_relaxes_to_origin() {
        let d = Domain::unit_disk();
        let cfg = SchemeConfig::new(Scheme::CatchingUp, 1e-3, 3.0, 100);
        let traj = simulate(&single([0.8, 0.0]), &cfg, &d, &Potential::Zero, &Potential::quadratic()).unwrap();
        let x = traj.final_record().measure.position(0)[0];
        assert!((x - 0.8 * (-3.0f64).exp()).abs() < 2e-3);
        assert!(traj.records.windows(2).all(|p| p[1].energy <= p[0].energy));
        assert!((traj.final_record().t - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_body_pair_contracts_at_unit_rate() {
        let d = Domain::unit_disk();
        let mu = ParticleMeasure::new(2, vec![-0.5, 0.0, 0.5, 0.0], vec![0.5, 0.5]).unwrap();
        let cfg = SchemeConfig::new(Scheme::CatchingUp, 1e-3, 2.0, 10);
        let traj = simulate(&mu, &cfg, &d, &Potential::quadratic(), &Potential::Zero).unwrap();
        let gap: Vec<(f64, f64)> = traj
            .records
            .iter()
            .map(|r| (r.t, crate::geometry::dist(r.measure.position(0), r.measure.position(1))))
            .collect();
        let rate = crate::transport::fit_decay_rate(&gap).unwrap();
        assert!((rate + 1.0).abs() < 2e-3, "{rate}");
    }

    #[test]
    fn support_bound_arithmetic() {
        assert_eq!(support_radius_bound(2.0, 3.0, 0.0), 3.0);
        assert_eq!(support_radius_bound(2.0, 0.0, 10.0), 3.0);
        assert!((support_radius_bound(1.0, 1.0, 2f64.ln()) - 4.0).abs() < 1e-14);
        assert!(support_growth_constant(&Potential::PowerAttraction { exponent: 3.0 }, &Potential::Zero).is_err());
    }

    #[test]
    fn invalid_configs() {
        let d = Domain::unit_disk();
        let mu = single([0.0, 0.0]);
        for cfg in [
            SchemeConfig::new(Scheme::CatchingUp, 0.0, 1.0, 1),
            SchemeConfig::new(Scheme::CatchingUp, 0.01, -1.0, 1),
            SchemeConfig::new(Scheme::CatchingUp, 0.01, 1.0, 0),
        ] {
            assert!(matches!(simulate(&mu, &cfg, &d, &Potential::Zero, &Potential::Zero), Err(DynamicsError::InvalidConfig(_))));
        }
        let big = SchemeConfig::new(Scheme::CatchingUp, 0.5, 1.0, 1);
        assert!(matches!(simulate(&mu, &big, &d, &Potential::Zero, &Potential::Zero), Err(DynamicsError::StepTooLarge { .. })));
    }

    #[test]
    fn identical_pair_has_zero_distance() {
        let d = Domain::unit_disk();
        let mu = ParticleMeasure::new(2, vec![-0.5, 0.1, 0.3, 0.2], vec![0.5, 0.5]).unwrap();
        let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 1.0, 10);
        let r = stability_experiment(&mu, &mu, &cfg, &d, &Potential::quadratic(), &Potential::Zero).unwrap();
        assert!(r.distances.iter().all(|x| *x == 0.0));
        assert!(!r.violated);
    }
}
