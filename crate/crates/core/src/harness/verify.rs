//! Property suites run by `proxflow verify`. All use fixed seeds.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{simulate, Scheme, SchemeConfig};
use crate::geometry::{
    ball_exclusion_check, convex_monotonicity_check, moreau_identity_check, prox_inequality_check,
    tangent_square_convexity_check, Domain,
};
use crate::measures::{discretize_initial, InitialRecipe, ParticleMeasure};
use crate::potentials::Potential;
use crate::transport::oracle::{permutation_oracle, shard_oracle};
use crate::transport::{wasserstein2, wasserstein2_distance};

use super::Check;

/// Every built-in domain kind, with the parameters used throughout the
/// suites.
pub fn builtin_domains() -> Vec<(&'static str, Domain)> {
    vec![
        ("unit_disk", Domain::unit_disk()),
        ("ball_3d", Domain::ball(vec![0.0, 0.0, 0.0], 1.5).unwrap()),
        ("box", Domain::cuboid(vec![-1.0, 0.0], vec![1.0, 0.5]).unwrap()),
        ("box_3d", Domain::cuboid(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap()),
        ("half_space", Domain::half_space(vec![0.3, -1.0], 0.2).unwrap()),
        ("convex_polygon", Domain::convex_polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [1.0, 1.8]]).unwrap()),
        ("annulus_sector", Domain::annulus_sector(0.9, 1.0, -0.1, PI + 0.1).unwrap()),
        ("disk_with_bite", Domain::disk_with_bite(1.0, [2.2, 0.0], 1.5).unwrap()),
        ("pac_man_sector", Domain::pac_man_sector(1.0, PI / 4.0, 7.0 * PI / 4.0).unwrap()),
    ]
}

pub fn geometry_suite(samples: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, d) in builtin_domains() {
        let r = moreau_identity_check(&d, samples, seed);
        out.push(Check::new(format!("moreau[{name}]"), r.passed(), format!("max error {:.2e}", r.max_excess)));
        let r = tangent_square_convexity_check(&d, samples, seed + 1);
        out.push(Check::new(format!("tangent_convexity[{name}]"), r.passed(), format!("max excess {:.2e}", r.max_excess)));
        if d.is_prox_regular() {
            let r = prox_inequality_check(&d, samples, seed + 2);
            out.push(Check::new(
                format!("prox_inequality[{name}]"),
                r.passed(),
                format!("{} violations, max excess {:.2e}, eta = {}", r.violations, r.max_excess, d.eta()),
            ));
            let r = ball_exclusion_check(&d, samples, seed + 3);
            out.push(Check::new(format!("ball_exclusion[{name}]"), r.passed(), format!("{} violations", r.violations)));
        }
        if d.is_convex() {
            let r = convex_monotonicity_check(&d, samples, seed + 4);
            out.push(Check::new(format!("convex_monotonicity[{name}]"), r.passed(), format!("max {:.2e}", r.max_excess)));
        }
    }
    let bite = Domain::disk_with_bite(1.0, [2.2, 0.0], 1.5).unwrap();
    let corrupted = bite.clone().with_eta(10.0 * bite.eta());
    let r = prox_inequality_check(&corrupted, samples, seed + 5);
    out.push(Check::new(
        "corrupted_eta_detected",
        !r.passed(),
        format!("eta = {} gives {} violations", corrupted.eta(), r.violations),
    ));
    out
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, masses: Vec<f64>) -> ParticleMeasure {
    let pos: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ParticleMeasure::new(2, pos, masses).expect("valid random measure")
}

/// Random masses `k_i / q` with positive integers `k_i` summing to `q`.
pub fn rational_masses(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Vec<f64> {
    assert!(n <= q);
    let mut k = vec![1usize; n];
    for _ in 0..q - n {
        k[rng.gen_range(0..n)] += 1;
    }
    k.into_iter().map(|x| x as f64 / q as f64).collect()
}

/// Simplex against exhaustive enumeration on equal-mass instances and
/// against the shard reduction on rational masses.
pub fn transport_suite(instances: usize, seed: u64) -> Vec<Check> {
    let results: Vec<(f64, f64, f64)> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let n = rng.gen_range(1..=7);
            let mu = random_measure(&mut rng, n, vec![1.0 / n as f64; n]);
            let nu = random_measure(&mut rng, n, vec![1.0 / n as f64; n]);
            let (d, plan) = wasserstein2(&mu, &nu).expect("solver");
            let perm_err = (d * d - permutation_oracle(&mu, &nu).unwrap()).abs();

            let q = rng.gen_range(2..=12);
            let na = rng.gen_range(1..=q.min(5));
            let nb = rng.gen_range(1..=q.min(5));
            let ma = rational_masses(&mut rng, na, q);
            let mb = rational_masses(&mut rng, nb, q);
            let a = random_measure(&mut rng, na, ma);
            let b = random_measure(&mut rng, nb, mb);
            let (ds, plan_s) = wasserstein2(&a, &b).expect("solver");
            let shard_err = (ds * ds - shard_oracle(&a, &b, q).unwrap()).abs();

            let marg = plan
                .row_marginals()
                .iter()
                .zip(mu.masses())
                .chain(plan.column_marginals().iter().zip(nu.masses()))
                .chain(plan_s.row_marginals().iter().zip(a.masses()))
                .chain(plan_s.column_marginals().iter().zip(b.masses()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            (perm_err, shard_err, marg)
        })
        .collect();
    let worst = |f: fn(&(f64, f64, f64)) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let (p, s, m) = (worst(|r| r.0), worst(|r| r.1), worst(|r| r.2));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut sym, mut tri) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..instances / 4 {
        let ms: Vec<ParticleMeasure> = (0..3)
            .map(|_| {
                let n = rng.gen_range(1..=6);
                let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
                let t: f64 = w.iter().sum();
                let mut masses: Vec<f64> = w.iter().map(|x| x / t).collect();
                let rest: f64 = masses[1..].iter().sum();
                masses[0] = 1.0 - rest;
                random_measure(&mut rng, n, masses)
            })
            .collect();
        let d = |i: usize, j: usize| wasserstein2_distance(&ms[i], &ms[j]).unwrap();
        sym = sym.max((d(0, 1) - d(1, 0)).abs());
        tri = tri.max(d(0, 2) - d(0, 1) - d(1, 2));
    }
    vec![
        Check::new("ot_permutation_oracle", p <= 1e-10, format!("max |W² − oracle| = {p:.2e} over {instances} instances")),
        Check::new("ot_shard_oracle", s <= 1e-10, format!("max |W² − oracle| = {s:.2e}")),
        Check::new("ot_marginals", m <= 1e-9, format!("max marginal error {m:.2e}")),
        Check::new("ot_symmetry", sym <= 1e-9, format!("max asymmetry {sym:.2e}")),
        Check::new("ot_triangle", tri <= 1e-9, format!("max triangle excess {tri:.2e}")),
    ]
}

/// Energy monotonicity along a bitten-disk aggregation run.
pub fn energy_suite(seed: u64) -> Check {
    let d = Domain::disk_with_bite(1.0, [2.2, 0.0], 1.5).unwrap();
    let mu = discretize_initial(&d, &InitialRecipe::UniformRandom { count: 40, within_radius: None }, seed).unwrap();
    let dt = 0.01;
    let cfg = SchemeConfig::new(Scheme::CatchingUp, dt, 3.0, 1);
    let w = Potential::quadratic();
    let traj = simulate(&mu, &cfg, &d, &w, &Potential::Zero).expect("simulation");
    let worst = traj.records.windows(2).map(|p| p[1].energy - p[0].energy).fold(f64::NEG_INFINITY, f64::max);
    Check::new("energy_monotone", worst <= dt * dt, format!("largest step increase {worst:.2e} (allowed dt² = {:.0e})", dt * dt))
}

/// Final-time distance between the two schemes at `dt` and `dt/2`.
pub fn scheme_gap_ratio(seed: u64, dt: f64) -> (f64, f64) {
    let d = Domain::unit_disk();
    let mu = discretize_initial(&d, &InitialRecipe::UniformRandom { count: 20, within_radius: None }, seed).unwrap();
    let w = Potential::quadratic();
    let v = Potential::linear_drift(vec![0.0, -1.0]);
    let gap = |dt: f64| {
        let a = SchemeConfig::new(Scheme::CatchingUp, dt, 1.0, 1000);
        let b = SchemeConfig::new(Scheme::ProjectedEuler, dt, 1.0, 1000);
        let ta = simulate(&mu, &a, &d, &w, &v).expect("simulation");
        let tb = simulate(&mu, &b, &d, &w, &v).expect("simulation");
        wasserstein2_distance(&ta.final_record().measure, &tb.final_record().measure).unwrap()
    };
    (gap(dt), gap(dt / 2.0))
}

pub fn scheme_consistency_suite(seed: u64) -> Check {
    let (g1, g2) = scheme_gap_ratio(seed, 0.01);
    let ratio = g1 / g2;
    Check::new(
        "scheme_consistency",
        (1.6..=2.5).contains(&ratio),
        format!("gap {g1:.3e} at dt, {g2:.3e} at dt/2, ratio {ratio:.3} (expected 2 ± 25%)"),
    )
}

/// `d_W(final at dt, final at dt/2)` for successive halvings.
pub fn cauchy_sequence(mu: &ParticleMeasure, cfg: &SchemeConfig, domain: &Domain, w: &Potential, v: &Potential, halvings: usize) -> Vec<f64> {
    let finals: Vec<ParticleMeasure> = (0..=halvings)
        .into_par_iter()
        .map(|k| {
            let c = SchemeConfig { dt: cfg.dt / f64::from(1u32 << k), record_every: usize::MAX / 2, ..cfg.clone() };
            simulate(mu, &c, domain, w, v).expect("simulation").final_record().measure.clone()
        })
        .collect();
    finals.windows(2).map(|p| wasserstein2_distance(&p[0], &p[1]).unwrap()).collect()
}

pub fn refinement_suite(seed: u64) -> Check {
    let d = Domain::disk_with_bite(1.0, [2.2, 0.0], 1.5).unwrap();
    let mu = discretize_initial(&d, &InitialRecipe::UniformRandom { count: 30, within_radius: None }, seed).unwrap();
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.02, 1.0, 1);
    let seq = cauchy_sequence(&mu, &cfg, &d, &Potential::quadratic(), &Potential::linear_drift(vec![-1.0, 0.5]), 3);
    let ok = seq.windows(2).all(|p| p[1] < p[0]);
    let shown: Vec<String> = seq.iter().map(|x| format!("{x:.3e}")).collect();
    Check::new("step_refinement", ok, format!("successive differences [{}]", shown.join(", ")))
}

/// Runs every suite.
pub fn verify_all() -> Vec<Check> {
    let mut out = geometry_suite(10_000, 1);
    out.extend(transport_suite(200, 2));
    out.push(energy_suite(3));
    out.push(scheme_consistency_suite(4));
    out.push(refinement_suite(5));
    out
}
