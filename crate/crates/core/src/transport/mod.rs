//! Exact quadratic Wasserstein distance between particle measures and
//! the quantities built on it.

pub mod oracle;
mod simplex;

use thiserror::Error;

use crate::geometry::Point;
use crate::measures::{energy, ParticleMeasure};
use crate::potentials::Potential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("transport solver stalled: {0}")]
    SolverStall(String),
    #[error("measures live in different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("oracle not applicable: {0}")]
    OracleMismatch(String),
    #[error("series value {0} is not positive")]
    NonPositiveValue(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `(i, j, γ_ij)` with `γ_ij > 0`, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub source_n: usize,
    pub target_n: usize,
}

impl TransportPlan {
    pub fn row_marginals(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.source_n];
        for &(i, _, g) in &self.entries {
            r[i] += g;
        }
        r
    }

    pub fn column_marginals(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.target_n];
        for &(_, j, g) in &self.entries {
            c[j] += g;
        }
        c
    }

    pub fn cost(&self, mu: &ParticleMeasure, nu: &ParticleMeasure) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, g)| g * sq_dist(mu.position(i), nu.position(j)))
            .sum()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `W₂(μ, ν)` and an optimal plan, solved exactly by the transportation
/// simplex with a dual optimality certificate.
pub fn wasserstein2(mu: &ParticleMeasure, nu: &ParticleMeasure) -> Result<(f64, TransportPlan), TransportError> {
    if mu.dim() != nu.dim() {
        return Err(TransportError::DimensionMismatch(mu.dim(), nu.dim()));
    }
    let (n, m) = (mu.len(), nu.len());
    let mut cost = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            cost.push(sq_dist(mu.position(i), nu.position(j)));
        }
    }
    // Both totals are 1 within 1e-12; rescale ν so they agree to rounding.
    let ta: f64 = mu.masses().iter().sum();
    let tb: f64 = nu.masses().iter().sum();
    let b: Vec<f64> = nu.masses().iter().map(|x| x * ta / tb).collect();
    let sol = simplex::solve(mu.masses(), &b, &cost)?;
    let plan = TransportPlan { entries: sol.flow, source_n: n, target_n: m };
    Ok((sol.cost.max(0.0).sqrt(), plan))
}

pub fn wasserstein2_distance(mu: &ParticleMeasure, nu: &ParticleMeasure) -> Result<f64, TransportError> {
    wasserstein2(mu, nu).map(|r| r.0)
}

/// Distance to the set of Dirac masses and the minimising centre
/// `x̄ = Σ m_i x_i`, which need not lie in the domain.
pub fn distance_to_singletons(mu: &ParticleMeasure) -> (f64, Point) {
    let c = mu.center_of_mass();
    let d2: f64 = mu.iter().map(|(x, m)| m * sq_dist(x, &c)).sum();
    (d2.max(0.0).sqrt(), Point::new(c))
}

/// One-sided finite-difference residual of the evolution variational
/// inequality at `μ(t)` against the reference `ν`:
///
/// `½(d²(μ(t+h), ν) − d²(μ(t), ν))/h + κ·d²(μ(t), ν) − (E(ν) − E(μ(t)))`,
///
/// which the inequality predicts to be at most `O(h)`.
#[allow(clippy::too_many_arguments)]
pub fn evi_residual(
    mu_t: &ParticleMeasure,
    mu_t_h: &ParticleMeasure,
    h: f64,
    nu: &ParticleMeasure,
    kappa_evi: f64,
    w: &Potential,
    v: &Potential,
    t: f64,
) -> Result<f64, TransportError> {
    let d0 = wasserstein2_distance(mu_t, nu)?.powi(2);
    let d1 = wasserstein2_distance(mu_t_h, nu)?.powi(2);
    let de = energy(nu, w, v, t) - energy(mu_t, w, v, t);
    Ok(0.5 * (d1 - d0) / h + kappa_evi * d0 - de)
}

/// Least-squares slope of `log(value)` against `t`.
pub fn fit_decay_rate(series: &[(f64, f64)]) -> Result<f64, TransportError> {
    if series.len() < 3 {
        return Err(TransportError::TooFewSamples { needed: 3, got: series.len() });
    }
    if let Some(&(_, v)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(TransportError::NonPositiveValue(v));
    }
    let n = series.len() as f64;
    let mt = series.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = series.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in series {
        sxy += (t - mt) * (v.ln() - ml);
        sxx += (t - mt) * (t - mt);
    }
    Ok(sxy / sxx)
}
