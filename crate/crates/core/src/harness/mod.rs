//! Scenario runner, built-in scenarios and the verification suite.

pub mod config;
pub mod scenarios;
pub mod verify;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::{self, simulate, DynamicsError, SchemeConfig, SimState, Trajectory};
use crate::geometry::{prox_inequality_check, Domain, GeometryError};
use crate::measures::{discretize_initial, MeasureError, ParticleMeasure};
use crate::potentials::{
    aggregation_exponent, evi_coefficient, singleton_decay_exponent, Potential, PotentialError,
};
use crate::transport::{evi_residual, fit_decay_rate, wasserstein2_distance, TransportError};

pub use config::{ConfigError, Experiment, ScenarioConfig};

/// Environment variable naming the root directory for scenario outputs.
pub const OUTPUT_ENV: &str = "PROXFLOW_OUT";

const ETA_SAMPLES: usize = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    /// Named scalar results (fitted rates, maxima) for callers and tests.
    pub metrics: Vec<(String, f64)>,
    pub output_dir: PathBuf,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] output: {}", self.experiment.name(), self.output_dir.display())?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        for (k, v) in &self.metrics {
            writeln!(f, "  {k} = {v:.6e}")?;
        }
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}", self.experiment.name())
    }
}

/// Output directory for a scenario: `root/output`, where `root` comes from
/// [`OUTPUT_ENV`] (default `out`) and `output` from the config (default the
/// experiment name).
pub fn output_dir(cfg: &ScenarioConfig, root: Option<&Path>) -> PathBuf {
    let root = root
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match &cfg.output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => root.join(p),
        None => root.join(cfg.experiment.name()),
    }
}

struct Setup {
    domain: Domain,
    w: Potential,
    v: Potential,
    scheme: SchemeConfig,
}

fn setup(cfg: &ScenarioConfig) -> Result<Setup, HarnessError> {
    Ok(Setup {
        domain: cfg.domain.build()?,
        w: cfg.potential.w.build()?,
        v: cfg.potential.v.build()?,
        scheme: cfg.scheme.build(),
    })
}

fn initial_measures(cfg: &ScenarioConfig, domain: &Domain) -> Result<(ParticleMeasure, Option<ParticleMeasure>), HarnessError> {
    let mu1 = discretize_initial(domain, &cfg.initial.recipe(), cfg.seed.wrapping_add(cfg.initial.seed_offset()))?;
    let mu2 = match &cfg.initial2 {
        Some(i2) => Some(discretize_initial(domain, &i2.recipe(), cfg.seed.wrapping_add(1).wrapping_add(i2.seed_offset()))?),
        None => None,
    };
    Ok((mu1, mu2))
}

/// Runs the configured experiment, writing CSV output below `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioReport, HarnessError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let s = setup(cfg)?;
    let (mu1, mu2) = initial_measures(cfg, &s.domain)?;
    let mut report = ScenarioReport {
        experiment: cfg.experiment,
        checks: Vec::new(),
        metrics: Vec::new(),
        output_dir: out_dir.to_path_buf(),
    };
    if s.domain.is_prox_regular() && !s.domain.is_convex() {
        let r = prox_inequality_check(&s.domain, ETA_SAMPLES, cfg.seed);
        report.checks.push(Check::new(
            "declared_eta",
            r.passed(),
            format!("{} violations in {ETA_SAMPLES} samples, max excess {:.2e}, eta = {}", r.violations, r.max_excess, s.domain.eta()),
        ));
    }
    match cfg.experiment {
        Experiment::Simulate => run_simulate(cfg, &s, &mu1, out_dir, &mut report)?,
        Experiment::Stability => run_stability(cfg, &s, &mu1, mu2.as_ref().expect("validated"), out_dir, &mut report)?,
        Experiment::Aggregate => run_aggregate(cfg, &s, &mu1, out_dir, &mut report)?,
        Experiment::Sharpness => run_sharpness(cfg, &s, &mu1, out_dir, &mut report)?,
        Experiment::Instability => run_instability(cfg, &s, &mu1, mu2.as_ref().expect("validated"), out_dir, &mut report)?,
        Experiment::EviCheck => run_evi(cfg, &s, &mu1, out_dir, &mut report)?,
    }
    Ok(report)
}

fn write_trajectory(cfg: &ScenarioConfig, traj: &Trajectory, out_dir: &Path, name: &str) -> Result<(), HarnessError> {
    traj.write_csv(&out_dir.join(format!("{name}.csv")))?;
    if cfg.snapshots {
        traj.write_snapshots(&out_dir.join(format!("{name}_snapshots")))?;
    }
    Ok(())
}

fn trapezoid(series: &[(f64, f64)]) -> f64 {
    series.windows(2).map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1)).sum()
}

/// `|E(0) − E(T) − ∫ D|` and `|E(0) − E(T)|` over a trajectory, with the
/// dissipation integrated by the trapezoid rule on the records.
pub fn energy_identity_residual(traj: &Trajectory) -> (f64, f64) {
    let first = &traj.records[0];
    let last = traj.final_record();
    let de = first.energy - last.energy;
    let integral = trapezoid(&traj.series(|r| r.dissipation));
    ((de - integral).abs(), de.abs())
}

/// Checks `value(t) ≤ value(0)·e^{ct}·(1 + slack)` at every record.
fn envelope_check(name: &str, series: &[(f64, f64)], c: f64, slack: f64) -> (Check, f64) {
    let v0 = series[0].1;
    let mut worst = 0.0f64;
    let mut ok = true;
    for &(t, v) in series {
        let env = v0 * (c * t).exp();
        if env > 0.0 {
            worst = worst.max(v / env);
        }
        if v > env * (1.0 + slack) + 1e-14 {
            ok = false;
        }
    }
    (
        Check::new(name, ok, format!("max measured/envelope = {worst:.6} (exponent {c:.6}, slack {slack})")),
        worst,
    )
}

fn fitted_rate(series: &[(f64, f64)]) -> Option<f64> {
    let positive: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.1 > 1e-300).collect();
    fit_decay_rate(&positive).ok()
}

fn run_simulate(cfg: &ScenarioConfig, s: &Setup, mu: &ParticleMeasure, out: &Path, report: &mut ScenarioReport) -> Result<(), HarnessError> {
    let traj = simulate(mu, &s.scheme, &s.domain, &s.w, &s.v)?;
    write_trajectory(cfg, &traj, out, "trajectory")?;
    report.checks.push(Check::new("feasibility", true, format!("{} steps inside the domain", traj.steps)));

    if !s.w.is_time_dependent() && !s.v.is_time_dependent() {
        let max_d = traj.records.iter().map(|r| r.dissipation).fold(0.0, f64::max);
        let tol = cfg.check.energy_tolerance.unwrap_or(
            1e-12 + s.scheme.dt * s.scheme.dt * s.scheme.record_every as f64 * (1.0 + max_d),
        );
        let worst = traj.records.windows(2).map(|p| p[1].energy - p[0].energy).fold(f64::NEG_INFINITY, f64::max);
        report.checks.push(Check::new(
            "energy_monotone",
            worst <= tol,
            format!("largest energy increase between records {worst:.3e} (tolerance {tol:.3e})"),
        ));
        let (res, de) = energy_identity_residual(&traj);
        report.metrics.push(("energy_identity_residual".into(), res));
        report.metrics.push(("energy_drop".into(), de));
    }

    if let Some((c, r0)) = traj.support_bound {
        let worst = traj
            .records
            .iter()
            .map(|r| r.support_radius / dynamics::support_radius_bound(r0, c, r.t))
            .fold(0.0, f64::max);
        report.checks.push(Check::new(
            "support_growth",
            worst <= 1.0,
            format!("max radius/bound = {worst:.6} with C = {c}, r0 = {r0:.6}"),
        ));
    }

    if s.v.is_zero() && s.w.lambda() > 0.0 && s.domain.is_bounded() {
        let c = singleton_decay_exponent(&s.w, &s.domain)?;
        let slack = cfg.check.envelope_slack.unwrap_or(dynamics::STABILITY_SLACK);
        let (check, _) = envelope_check("singleton_decay", &traj.series(|r| r.dw_singleton), c, slack);
        report.checks.push(check);
    }
    report.metrics.push(("final_support_radius".into(), traj.final_record().support_radius));
    report.metrics.push(("ambiguous_projections".into(), traj.ambiguous_projections as f64));
    Ok(())
}

fn run_stability(
    cfg: &ScenarioConfig,
    s: &Setup,
    mu1: &ParticleMeasure,
    mu2: &ParticleMeasure,
    out: &Path,
    report: &mut ScenarioReport,
) -> Result<(), HarnessError> {
    let r = dynamics::stability_experiment(mu1, mu2, &s.scheme, &s.domain, &s.w, &s.v)?;
    let mut w = csv::Writer::from_path(out.join("stability.csv"))?;
    w.write_record(["t", "distance", "envelope"])?;
    for ((t, d), e) in r.times.iter().zip(&r.distances).zip(&r.envelope) {
        w.write_record([t, d, e].map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    let slack = cfg.check.envelope_slack.unwrap_or(dynamics::STABILITY_SLACK);
    let series: Vec<(f64, f64)> = r.times.iter().copied().zip(r.distances.iter().copied()).collect();
    let (check, worst) = envelope_check("contraction_envelope", &series, r.kappa, slack);
    report.checks.push(check);
    report.metrics.push(("kappa".into(), r.kappa));
    report.metrics.push(("max_ratio".into(), worst));
    if let Some(rate) = fitted_rate(&series) {
        report.metrics.push(("fitted_rate".into(), rate));
        if let Some(max_rate) = cfg.check.max_rate {
            report.checks.push(Check::new("fitted_rate", rate <= max_rate, format!("fitted {rate:.4} ≤ {max_rate}")));
        }
    }
    Ok(())
}

fn run_aggregate(cfg: &ScenarioConfig, s: &Setup, mu: &ParticleMeasure, out: &Path, report: &mut ScenarioReport) -> Result<(), HarnessError> {
    let c = aggregation_exponent(&s.w, &s.domain)?;
    let traj = simulate(mu, &s.scheme, &s.domain, &s.w, &s.v)?;
    write_trajectory(cfg, &traj, out, "trajectory")?;
    let series = traj.series(|r| r.dw_singleton);
    let slack = cfg.check.envelope_slack.unwrap_or(dynamics::STABILITY_SLACK);
    let (check, worst) = envelope_check("aggregation_envelope", &series, c, slack);
    report.checks.push(check);
    let max_rate = cfg.check.max_rate.unwrap_or(c + 0.05);
    match fitted_rate(&series) {
        Some(rate) => {
            report.checks.push(Check::new("fitted_rate", rate <= max_rate, format!("fitted {rate:.4} ≤ {max_rate:.4}")));
            report.metrics.push(("fitted_rate".into(), rate));
        }
        None => report.checks.push(Check::new("fitted_rate", false, "series too short to fit")),
    }
    report.metrics.push(("aggregation_exponent".into(), c));
    report.metrics.push(("max_ratio".into(), worst));
    report.metrics.push(("final_dw_singleton".into(), traj.final_record().dw_singleton));
    Ok(())
}

fn run_sharpness(cfg: &ScenarioConfig, s: &Setup, mu: &ParticleMeasure, out: &Path, report: &mut ScenarioReport) -> Result<(), HarnessError> {
    let traj = simulate(mu, &s.scheme, &s.domain, &s.w, &s.v)?;
    write_trajectory(cfg, &traj, out, "trajectory")?;
    let disp = traj.max_displacement();
    let max_disp = cfg.check.max_displacement.unwrap_or(1e-6);
    report.checks.push(Check::new("stationary", disp < max_disp, format!("max displacement {disp:.3e} < {max_disp:e}")));
    let diss = traj.records.iter().map(|r| r.dissipation).fold(0.0, f64::max);
    let max_diss = cfg.check.max_dissipation.unwrap_or(1e-10);
    report.checks.push(Check::new("zero_dissipation", diss < max_diss, format!("max dissipation {diss:.3e} < {max_diss:e}")));
    let drop = traj
        .records
        .windows(2)
        .map(|p| p[0].dw_singleton - p[1].dw_singleton)
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "no_aggregation",
        drop <= 1e-12,
        format!("largest decrease of the distance to singletons {drop:.3e}"),
    ));
    report.metrics.push(("max_displacement".into(), disp));
    report.metrics.push(("max_dissipation".into(), diss));
    report.metrics.push(("dw_singleton".into(), traj.final_record().dw_singleton));
    report.metrics.push(("eta".into(), s.domain.eta()));
    Ok(())
}

fn run_instability(
    cfg: &ScenarioConfig,
    s: &Setup,
    mu1: &ParticleMeasure,
    mu2: &ParticleMeasure,
    out: &Path,
    report: &mut ScenarioReport,
) -> Result<(), HarnessError> {
    let (t1, t2) = std::thread::scope(|sc| {
        let h1 = sc.spawn(|| simulate(mu1, &s.scheme, &s.domain, &s.w, &s.v));
        let h2 = sc.spawn(|| simulate(mu2, &s.scheme, &s.domain, &s.w, &s.v));
        (h1.join().expect("simulation thread panicked"), h2.join().expect("simulation thread panicked"))
    });
    let (t1, t2) = (t1?, t2?);
    write_trajectory(cfg, &t1, out, "trajectory_1")?;
    write_trajectory(cfg, &t2, out, "trajectory_2")?;
    let d0 = wasserstein2_distance(&t1.records[0].measure, &t2.records[0].measure)?;
    let d1 = wasserstein2_distance(&t1.final_record().measure, &t2.final_record().measure)?;
    let min_sep = cfg.check.min_separation.unwrap_or(0.5);
    report.checks.push(Check::new(
        "separation",
        d1 >= min_sep,
        format!("distance {d0:.3e} at t = 0 grows to {d1:.6} at t = {:.3} (threshold {min_sep})", t1.final_record().t),
    ));
    report.metrics.push(("initial_distance".into(), d0));
    report.metrics.push(("final_distance".into(), d1));
    report.metrics.push(("amplification".into(), d1 / d0));
    report.metrics.push(("ambiguous_projections".into(), (t1.ambiguous_projections + t2.ambiguous_projections) as f64));
    Ok(())
}

/// Measure at time `t` (a multiple of the step) and one step of size `h`
/// after it.
pub fn evi_pair(
    mu0: &ParticleMeasure,
    scheme: &SchemeConfig,
    t: f64,
    h: f64,
    domain: &Domain,
    w: &Potential,
    v: &Potential,
) -> Result<(ParticleMeasure, ParticleMeasure), DynamicsError> {
    let mu_t = if t > 0.0 {
        let cfg = SchemeConfig { t_end: t, record_every: usize::MAX / 2, ..scheme.clone() };
        simulate(mu0, &cfg, domain, w, v)?.final_record().measure.clone()
    } else {
        mu0.clone()
    };
    let state = SimState { time: t, ..SimState::new(mu_t.clone()) };
    let next = dynamics::step(&state, scheme.scheme, h, domain, w, v)?;
    Ok((mu_t, next.measure))
}

fn run_evi(cfg: &ScenarioConfig, s: &Setup, mu0: &ParticleMeasure, out: &Path, report: &mut ScenarioReport) -> Result<(), HarnessError> {
    let e = cfg.evi.as_ref().expect("validated");
    let kappa = evi_coefficient(&s.w, &s.v, &s.domain)?;
    let tol = cfg.check.evi_tolerance.unwrap_or(1e-2);
    let mut w = csv::Writer::from_path(out.join("evi.csv"))?;
    w.write_record(["t", "reference", "residual"])?;
    let mut worst = f64::NEG_INFINITY;
    for &t in &e.times {
        let (mu_t, mu_th) = evi_pair(mu0, &s.scheme, t, e.h, &s.domain, &s.w, &s.v)?;
        for k in 0..e.references {
            let recipe = crate::measures::InitialRecipe::UniformRandom { count: e.reference_size, within_radius: None };
            let nu = discretize_initial(&s.domain, &recipe, cfg.seed.wrapping_add(1000 + k as u64))?;
            let r = evi_residual(&mu_t, &mu_th, e.h, &nu, kappa, &s.w, &s.v, t)?;
            worst = worst.max(r);
            w.write_record([format!("{t:e}"), k.to_string(), format!("{r:e}")])?;
        }
    }
    w.flush()?;
    report.checks.push(Check::new(
        "evi_residual",
        worst <= tol,
        format!("max residual {worst:.3e} ≤ {tol:e} over {} references at {} times", e.references, e.times.len()),
    ));
    report.metrics.push(("kappa_evi".into(), kappa));
    report.metrics.push(("max_residual".into(), worst));
    Ok(())
}
