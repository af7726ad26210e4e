//! Sampling checks of the prox-regularity constant and cone identities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, moreau_decompose, norm, sub, Domain, Point, TOL_GEOM, TOL_NUM};

#[derive(Debug, Clone, PartialEq)]
pub struct ProxReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest observed excess over the allowed bound (≤ 0 when clean).
    pub max_excess: f64,
}

impl ProxReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Triple {
    x: Point,
    v: Vec<f64>,
    y: Point,
}

fn sample_triple(domain: &Domain, rng: &mut ChaCha8Rng) -> Triple {
    loop {
        let x = domain.sample_boundary(rng);
        let cone = domain.normal_cone(&x).expect("boundary samples are members");
        let Some(v) = cone.sample_unit(rng) else { continue };
        // Half the reference points come from the boundary, where the
        // inequality is tight.
        let y = if rng.gen::<bool>() { domain.sample_interior(rng) } else { domain.sample_boundary(rng) };
        return Triple { x, v, y };
    }
}

/// Checks `⟨v, y − x⟩ ≤ |y − x|² / (2η)` on random triples with
/// `x ∈ ∂Ω`, unit `v ∈ N(Ω, x)` and `y ∈ Ω`, using the domain's declared η.
pub fn prox_inequality_check(domain: &Domain, samples: usize, seed: u64) -> ProxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = domain.eta();
    let mut report = ProxReport { samples, violations: 0, max_excess: f64::NEG_INFINITY };
    for _ in 0..samples {
        let Triple { x, v, y } = sample_triple(domain, &mut rng);
        let d = sub(&y, &x);
        let bound = if eta.is_infinite() { 0.0 } else { dot(&d, &d) / (2.0 * eta) };
        let excess = dot(&v, &d) - bound;
        report.max_excess = report.max_excess.max(excess);
        if excess > TOL_NUM {
            report.violations += 1;
        }
    }
    report
}

/// Ball-exclusion form: no sampled point of Ω lies in the open ball of
/// radius η about `x + ηv`. For η = ∞ the ball degenerates to the open
/// half-space `{⟨v, y − x⟩ > 0}`.
pub fn ball_exclusion_check(domain: &Domain, samples: usize, seed: u64) -> ProxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = domain.eta();
    let mut report = ProxReport { samples, violations: 0, max_excess: f64::NEG_INFINITY };
    for _ in 0..samples {
        let Triple { x, v, y } = sample_triple(domain, &mut rng);
        let (excess, tol) = if eta.is_infinite() {
            (dot(&v, &sub(&y, &x)), TOL_NUM)
        } else {
            let center: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eta * b).collect();
            (eta - super::dist(&y, &center), TOL_GEOM * eta.max(1.0))
        };
        report.max_excess = report.max_excess.max(excess);
        if excess > tol {
            report.violations += 1;
        }
    }
    report
}

/// For convex domains: `⟨P_x(v) − v, x − y⟩ ≤ 0` for boundary `x`,
/// arbitrary `v` and `y ∈ Ω`.
pub fn convex_monotonicity_check(domain: &Domain, samples: usize, seed: u64) -> ProxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProxReport { samples, violations: 0, max_excess: f64::NEG_INFINITY };
    for _ in 0..samples {
        let x = domain.sample_boundary(&mut rng);
        let v: Vec<f64> = (0..domain.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y = domain.sample_interior(&mut rng);
        let pv = domain.project_tangent(&x, &v).expect("boundary samples are members");
        let lhs = dot(&sub(&pv, &v), &sub(&x, &y));
        let tol = TOL_NUM * (norm(&v) * super::dist(&x, &y)).max(1.0);
        report.max_excess = report.max_excess.max(lhs);
        if lhs > tol {
            report.violations += 1;
        }
    }
    report
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

/// Moreau decomposition at random boundary points: worst of
/// `|⟨v_T, v_N⟩|` and `||v|² − |v_T|² − |v_N|²|`, plus idempotence of the
/// tangential projection.
pub fn moreau_identity_check(domain: &Domain, samples: usize, seed: u64) -> ProxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProxReport { samples, violations: 0, max_excess: f64::NEG_INFINITY };
    for _ in 0..samples {
        let x = domain.sample_boundary(&mut rng);
        let v = random_vector(domain.dim(), &mut rng);
        let cone = domain.normal_cone(&x).expect("boundary samples are members");
        let (vt, vn) = moreau_decompose(&v, &cone);
        let orth = dot(&vt, &vn).abs();
        let pyth = (dot(&v, &v) - dot(&vt, &vt) - dot(&vn, &vn)).abs();
        let again = cone.project_polar(&vt);
        let idem = again.iter().zip(&vt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let err = orth.max(pyth).max(idem);
        report.max_excess = report.max_excess.max(err);
        if err > TOL_NUM {
            report.violations += 1;
        }
    }
    report
}

/// Convexity of `v ↦ |P_x(v)|²` along random segments at boundary points.
pub fn tangent_square_convexity_check(domain: &Domain, samples: usize, seed: u64) -> ProxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProxReport { samples, violations: 0, max_excess: f64::NEG_INFINITY };
    let sq = |u: &[f64]| dot(u, u);
    for _ in 0..samples {
        let x = domain.sample_boundary(&mut rng);
        let cone = domain.normal_cone(&x).expect("boundary samples are members");
        let v1 = random_vector(domain.dim(), &mut rng);
        let v2 = random_vector(domain.dim(), &mut rng);
        let th: f64 = rng.gen();
        let mid: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| (1.0 - th) * a + th * b).collect();
        let lhs = sq(&cone.project_polar(&mid));
        let rhs = (1.0 - th) * sq(&cone.project_polar(&v1)) + th * sq(&cone.project_polar(&v2));
        let excess = lhs - rhs;
        report.max_excess = report.max_excess.max(excess);
        if excess > TOL_NUM {
            report.violations += 1;
        }
    }
    report
}

/// Checks that componentwise projection of the displaced points is the
/// projection onto the product set Ωⁿ: the stacked residual must lie in
/// `N(Ω, z₁) × … × N(Ω, zₙ)` and within the uniqueness radius η.
pub fn product_projection_check(domain: &Domain, points: &[Point], displacement: &[Vec<f64>]) -> bool {
    assert_eq!(points.len(), displacement.len());
    let mut stacked_sq = 0.0;
    for (x, dx) in points.iter().zip(displacement) {
        let y: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + b).collect();
        let proj = domain.project(&y);
        if proj.ambiguous || !domain.contains(&proj.point) {
            return false;
        }
        let residual = sub(&y, &proj.point);
        let Ok(cone) = domain.normal_cone(&proj.point) else { return false };
        let in_cone = cone.project(&residual);
        if super::dist(&in_cone, &residual) > TOL_NUM * (1.0 + norm(&residual)) {
            return false;
        }
        stacked_sq += dot(&residual, &residual);
    }
    stacked_sq.sqrt() < domain.eta()
}
