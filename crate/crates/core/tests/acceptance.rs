//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proxflow::dynamics::{simulate, stability_experiment, support_growth_constant, support_radius_bound, Scheme, SchemeConfig};
use proxflow::geometry::{dot, moreau_decompose, Domain};
use proxflow::harness::energy_identity_residual;
use proxflow::harness::scenarios::{instability_configuration, sharpness_configuration};
use proxflow::harness::evi_pair;
use proxflow::measures::{discretize_initial, InitialRecipe, ParticleMeasure};
use proxflow::potentials::{aggregation_exponent, contraction_exponent, evi_coefficient, Potential};
use proxflow::transport::{distance_to_singletons, evi_residual, fit_decay_rate, wasserstein2, wasserstein2_distance};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bite() -> Domain {
    Domain::disk_with_bite(1.0, [2.2, 0.0], 1.5).unwrap()
}

fn random_in(domain: &Domain, count: usize, seed: u64) -> ParticleMeasure {
    discretize_initial(domain, &InitialRecipe::UniformRandom { count, within_radius: None }, seed).unwrap()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn all_domains() -> Vec<(&'static str, Domain)> {
    vec![
        ("unit_disk", Domain::unit_disk()),
        ("ball_3d", Domain::ball(vec![0.5, 0.0, -0.5], 1.5).unwrap()),
        ("box", Domain::cuboid(vec![-1.0, 0.0], vec![1.0, 0.5]).unwrap()),
        ("box_3d", Domain::cuboid(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap()),
        ("half_space", Domain::half_space(vec![0.3, -1.0], 0.2).unwrap()),
        ("convex_polygon", Domain::convex_polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [1.0, 1.8]]).unwrap()),
        ("annulus_sector", Domain::annulus_sector(0.9, 1.0, -0.1, PI + 0.1).unwrap()),
        ("disk_with_bite", bite()),
        ("pac_man_sector", Domain::pac_man_sector(1.0, PI / 4.0, 7.0 * PI / 4.0).unwrap()),
    ]
}

fn geometry() -> Outcome {
    const N: usize = 10_000;
    let mut worst_orth = 0.0f64;
    let mut worst_convex = f64::NEG_INFINITY;
    let mut worst_prox = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (k, (name, d)) in all_domains().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let dim = d.dim();
        let rand_v = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
        let (mut orth, mut convex) = (0.0f64, f64::NEG_INFINITY);
        for _ in 0..N {
            let x = d.sample_boundary(&mut rng);
            let cone = d.normal_cone(&x).unwrap();
            let v = rand_v(&mut rng);
            let (vt, vn) = moreau_decompose(&v, &cone);
            let o = dot(&vt, &vn).abs();
            let p = (dot(&v, &v) - dot(&vt, &vt) - dot(&vn, &vn)).abs();
            orth = orth.max(o.max(p));

            let v2 = rand_v(&mut rng);
            let th: f64 = rng.gen();
            let mid: Vec<f64> = v.iter().zip(&v2).map(|(a, b)| (1.0 - th) * a + th * b).collect();
            let sq = |u: &[f64]| {
                let t = d.project_tangent(&x, u).unwrap();
                dot(&t, &t)
            };
            convex = convex.max(sq(&mid) - (1.0 - th) * sq(&v) - th * sq(&v2));
        }
        worst_orth = worst_orth.max(orth);
        worst_convex = worst_convex.max(convex);
        if orth > 1e-10 || convex > 1e-10 {
            failures.push(name);
        }
        if d.is_prox_regular() {
            let eta = d.eta();
            let mut prox = f64::NEG_INFINITY;
            let mut drawn = 0;
            while drawn < N {
                let x = d.sample_boundary(&mut rng);
                let Some(n) = d.normal_cone(&x).unwrap().sample_unit(&mut rng) else { continue };
                let y = if rng.gen::<bool>() { d.sample_interior(&mut rng) } else { d.sample_boundary(&mut rng) };
                let diff: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                let bound = if eta.is_infinite() { 0.0 } else { dot(&diff, &diff) / (2.0 * eta) };
                prox = prox.max(dot(&n, &diff) - bound);
                drawn += 1;
            }
            worst_prox = worst_prox.max(prox);
            if prox > 1e-10 {
                failures.push(name);
            }
        }
    }
    let msg = format!(
        "Moreau error {worst_orth:.1e}, convexity excess {worst_convex:.1e}, prox excess {worst_prox:.1e} over {N} samples per domain"
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; failing domains {failures:?}"))
    }
}

fn random_measure(rng: &mut ChaCha8Rng, masses: Vec<f64>) -> ParticleMeasure {
    let pos = (0..2 * masses.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ParticleMeasure::new(2, pos, masses).unwrap()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// Minimum over all permutations, by recursion.
fn best_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
    best
}

// Assignment minimum over shards by dynamic programming on target subsets.
fn shard_assignment(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let q = xs.len();
    let mut best = vec![f64::INFINITY; 1 << q];
    best[0] = 0.0;
    for s in 0..(1usize << q) {
        let i = s.count_ones() as usize;
        if i == q || !best[s].is_finite() {
            continue;
        }
        for (j, y) in ys.iter().enumerate() {
            if s & (1 << j) == 0 {
                let c = best[s] + sq(&xs[i], y);
                let t = s | (1 << j);
                best[t] = best[t].min(c);
            }
        }
    }
    best[(1 << q) - 1]
}

fn transport() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_perm = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=7);
        let mu = random_measure(&mut rng, vec![1.0 / n as f64; n]);
        let nu = random_measure(&mut rng, vec![1.0 / n as f64; n]);
        let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sq(mu.position(i), nu.position(j))).collect()).collect();
        let oracle = best_assignment(&cost) / n as f64;
        let d = wasserstein2_distance(&mu, &nu).map_err(|e| e.to_string())?;
        worst_perm = worst_perm.max((d * d - oracle).abs());
    }
    let mut worst_shard = 0.0f64;
    for _ in 0..100 {
        let q = rng.gen_range(2..=12);
        let counts = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(1..=q.min(5));
            let mut k = vec![1usize; n];
            for _ in 0..q - n {
                k[rng.gen_range(0..n)] += 1;
            }
            k
        };
        let (ka, kb) = (counts(&mut rng), counts(&mut rng));
        let a = random_measure(&mut rng, ka.iter().map(|&k| k as f64 / q as f64).collect());
        let b = random_measure(&mut rng, kb.iter().map(|&k| k as f64 / q as f64).collect());
        let shards = |m: &ParticleMeasure, k: &[usize]| -> Vec<Vec<f64>> {
            k.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(m.position(i).to_vec(), c)).collect()
        };
        let oracle = shard_assignment(&shards(&a, &ka), &shards(&b, &kb)) / q as f64;
        let (d, plan) = wasserstein2(&a, &b).map_err(|e| e.to_string())?;
        worst_shard = worst_shard.max((d * d - oracle).abs());
        let marg = plan.row_marginals().iter().zip(a.masses()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if marg > 1e-9 {
            return Err(format!("plan marginal off by {marg:e}"));
        }
    }
    ensure(
        worst_perm <= 1e-10 && worst_shard <= 1e-10,
        format!("max |W² − permutation oracle| = {worst_perm:.1e} (200 instances), max |W² − shard oracle| = {worst_shard:.1e} (q ≤ 12)"),
    )
}

fn energy_dissipation() -> Outcome {
    let d = bite();
    let mu = random_in(&d, 100, 3);
    let w = Potential::quadratic();
    let run = |dt: f64| {
        let cfg = SchemeConfig::new(Scheme::CatchingUp, dt, 5.0, 1);
        let traj = simulate(&mu, &cfg, &d, &w, &Potential::Zero).unwrap();
        energy_identity_residual(&traj)
    };
    let (r1, de) = run(1e-3);
    let (r2, _) = run(5e-4);
    let rel = r1 / de;
    let ratio = r1 / r2;
    ensure(
        rel <= 5e-2 && ratio >= 1.5,
        format!("|ΔE − ∫D| / |ΔE| = {rel:.2e} at dt = 1e-3; residual ratio under halving {ratio:.3}"),
    )
}

fn convex_contraction() -> Outcome {
    let d = Domain::unit_disk();
    let (w, v) = (Potential::Zero, Potential::quadratic());
    let kappa = contraction_exponent(&w, &v, &d).unwrap();
    if kappa != -1.0 {
        return Err(format!("contraction exponent {kappa}, expected -1"));
    }
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 3.0, 10);
    let (mut worst_ratio, mut worst_rate) = (0.0f64, f64::NEG_INFINITY);
    for k in 0..10 {
        let mu1 = random_in(&d, 20, 40 + 2 * k);
        let mu2 = random_in(&d, 20, 41 + 2 * k);
        let r = stability_experiment(&mu1, &mu2, &cfg, &d, &w, &v).unwrap();
        for ((t, dist), _) in r.times.iter().zip(&r.distances).zip(&r.envelope) {
            worst_ratio = worst_ratio.max(dist / ((-t).exp() * r.distances[0]));
        }
        let series: Vec<(f64, f64)> = r.times.iter().copied().zip(r.distances.iter().copied()).collect();
        worst_rate = worst_rate.max(fit_decay_rate(&series).unwrap());
    }
    ensure(
        worst_ratio <= 1.01 && worst_rate <= -0.95,
        format!("max d(t)/(e^(-t) d(0)) = {worst_ratio:.4}, slowest fitted rate {worst_rate:.4} over 10 pairs"),
    )
}

fn aggregation() -> Outcome {
    let d = bite();
    let prox = proxflow::geometry::prox_inequality_check(&d, 10_000, 77);
    if !prox.passed() {
        return Err(format!("declared eta = {} fails sampling: {prox:?}", d.eta()));
    }
    let w = Potential::quadratic();
    let c = aggregation_exponent(&w, &d).unwrap();
    let expected = -1.0 + d.diameter() / (2.0 * 1.5);
    if (c - expected).abs() > 1e-15 || (c + 1.0 / 3.0).abs() > 1e-15 {
        return Err(format!("aggregation exponent {c}, expected -1/3"));
    }
    let mu = random_in(&d, 100, 7);
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 10.0, 10);
    let traj = simulate(&mu, &cfg, &d, &w, &Potential::Zero).unwrap();
    let d0 = traj.records[0].dw_singleton;
    let mut worst = 0.0f64;
    for r in &traj.records {
        worst = worst.max(r.dw_singleton / (d0 * (c * r.t).exp()));
    }
    // The closed form for the distance to singletons agrees with the solver.
    for r in traj.records.iter().step_by(20) {
        let (dist, center) = distance_to_singletons(&r.measure);
        let direct = wasserstein2_distance(&r.measure, &ParticleMeasure::dirac(center)).unwrap();
        if (direct - dist).abs() > 1e-9 {
            return Err(format!("distance to singletons {dist} vs solver {direct}"));
        }
    }
    let rate = fit_decay_rate(&traj.series(|r| r.dw_singleton)).unwrap();
    ensure(
        worst <= 1.01 && rate <= -0.30,
        format!("C = {c:.4}, max d/(d0 e^(Ct)) = {worst:.4}, fitted rate {rate:.4}"),
    )
}

fn sharpness() -> Outcome {
    let (d, mu) = sharpness_configuration(0.1).unwrap();
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 5.0, 1);
    let traj = simulate(&mu, &cfg, &d, &Potential::quadratic(), &Potential::Zero).unwrap();
    let diss = traj.records.iter().map(|r| r.dissipation).fold(0.0, f64::max);
    let disp = traj.max_displacement();
    let drop = traj.records.windows(2).map(|p| p[0].dw_singleton - p[1].dw_singleton).fold(0.0, f64::max);
    ensure(
        diss < 1e-10 && disp < 1e-6 && drop <= 0.0 && (traj.final_record().t - 5.0).abs() < 1e-9,
        format!("max dissipation {diss:.1e}, max displacement {disp:.1e}, largest decrease of d(μ, singletons) {drop:.1e}"),
    )
}

fn instability() -> Outcome {
    let (d, up, down) = instability_configuration(1e-6);
    let w = Potential::quadratic();
    let v = Potential::linear_drift(vec![-2.0, 0.0]);
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 1.0, 10);
    let a = simulate(&up, &cfg, &d, &w, &v).unwrap();
    let b = simulate(&down, &cfg, &d, &w, &v).unwrap();
    let d0 = wasserstein2_distance(&up, &down).unwrap();
    let d1 = wasserstein2_distance(&a.final_record().measure, &b.final_record().measure).unwrap();
    ensure(
        (d0 - 2e-6).abs() < 1e-15 && d1 >= 0.5 && (a.final_record().t - 1.0).abs() < 1e-9,
        format!("separation {d0:.1e} at t = 0, {d1:.4} at t = 1"),
    )
}

fn particle_count_stability() -> Outcome {
    let d = Domain::unit_disk();
    let w = Potential::quadratic();
    let v = Potential::linear_drift(vec![2.0, 0.0]);
    let kappa = contraction_exponent(&w, &v, &d).unwrap();
    let mu50 = random_in(&d, 50, 11);
    let mu100 = random_in(&d, 100, 12);
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 5.0, 10);
    let r = stability_experiment(&mu50, &mu100, &cfg, &d, &w, &v).unwrap();
    let d0 = r.distances[0];
    let worst = r.times.iter().zip(&r.distances).map(|(t, x)| x / ((kappa * t).exp() * d0)).fold(0.0, f64::max);
    ensure(worst <= 1.01, format!("κ = {kappa}, max d(t)/(e^(κt) d(0)) = {worst:.4}, d(0) = {d0:.4}"))
}

fn support_growth() -> Outcome {
    let d = Domain::half_space(vec![0.0, 1.0], 2.0).unwrap();
    let w = Potential::quadratic();
    let v = Potential::Quadratic { strength: 1.0, center: Some(vec![0.0, 4.0]) };
    let c = support_growth_constant(&w, &v).unwrap();
    let mu = discretize_initial(&d, &InitialRecipe::UniformRandom { count: 50, within_radius: Some(1.0) }, 9).unwrap();
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 5.0, 5);
    let traj = simulate(&mu, &cfg, &d, &w, &v).unwrap();
    let r0 = 1.0;
    let worst = traj.records.iter().map(|r| r.support_radius / support_radius_bound(r0, c, r.t)).fold(0.0, f64::max);
    ensure(
        worst <= 1.0 && mu.support_radius() <= r0,
        format!("C = {c}, max radius/bound = {worst:.4}, final radius {:.4}", traj.final_record().support_radius),
    )
}

fn evi() -> Outcome {
    let d = bite();
    let (w, v) = (Potential::quadratic(), Potential::Zero);
    let kappa = evi_coefficient(&w, &v, &d).unwrap();
    let mu0 = random_in(&d, 30, 5);
    let cfg = SchemeConfig::new(Scheme::CatchingUp, 0.01, 1.0, 1);
    let h = 1e-4;
    let mut worst = f64::NEG_INFINITY;
    for t in [0.0, 0.5, 2.0] {
        let (mu_t, mu_th) = evi_pair(&mu0, &cfg, t, h, &d, &w, &v).unwrap();
        for k in 0..20 {
            let nu = random_in(&d, 10, 500 + k);
            worst = worst.max(evi_residual(&mu_t, &mu_th, h, &nu, kappa, &w, &v, t).unwrap());
        }
    }
    ensure(worst <= 1e-2, format!("κ_evi = {kappa:.4}, max residual {worst:.3e} over 20 references at 3 times"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("geometry suite", geometry),
        ("transport exactness", transport),
        ("energy dissipation", energy_dissipation),
        ("convex-domain contraction", convex_contraction),
        ("aggregation", aggregation),
        ("sharpness", sharpness),
        ("instability", instability),
        ("particle-count stability", particle_count_stability),
        ("support growth", support_growth),
        ("evi spot-check", evi),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {:>2} {name}: {msg} [{secs:.1}s]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {msg} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
