//! Interaction and external potentials.
//!
//! Each potential carries a declared geodesic-convexity constant and a
//! bound on `sup_{|x| ≤ r} |∇f(x)|`. The constants are analytic; the
//! samplers in the test suite only validate them.

use thiserror::Error;

use crate::geometry::{norm, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("unknown potential `{0}`")]
    UnknownPotential(String),
    #[error("invalid parameter for `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("domain is unbounded; the gradient bound is infinite")]
    UnboundedDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `f ≡ 0`.
    Zero,
    /// `f(x) = (k/2)|x − c|²`.
    Quadratic { strength: f64, center: Option<Vec<f64>> },
    /// `f(x) = ⟨a, x⟩`.
    LinearDrift { slope: Vec<f64> },
    /// `f(x) = |x|^p / p`, `p ≥ 2`.
    PowerAttraction { exponent: f64 },
    /// `f(t, x) = (1 + a·sin(ωt))·base(x)` with `|a| < 1`.
    Modulated { base: Box<Potential>, amplitude: f64, frequency: f64 },
}

/// Named parameters accepted by [`builtin_potential`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PotentialParams {
    pub strength: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub slope: Option<Vec<f64>>,
    pub exponent: Option<f64>,
}

pub fn builtin_potential(name: &str, params: &PotentialParams) -> Result<Potential, PotentialError> {
    let bad = |reason: &str| PotentialError::InvalidParameter { name: name.to_string(), reason: reason.to_string() };
    match name {
        "zero" => Ok(Potential::Zero),
        "quadratic" => {
            let strength = params.strength.unwrap_or(1.0);
            if !(strength.is_finite() && strength >= 0.0) {
                return Err(bad("strength must be finite and nonnegative"));
            }
            Ok(Potential::Quadratic { strength, center: params.center.clone() })
        }
        "linear_drift" => {
            let slope = params.slope.clone().ok_or_else(|| bad("missing `slope`"))?;
            if slope.is_empty() || slope.iter().any(|c| !c.is_finite()) {
                return Err(bad("slope must be a finite vector"));
            }
            Ok(Potential::LinearDrift { slope })
        }
        "power_attraction" => {
            let exponent = params.exponent.ok_or_else(|| bad("missing `exponent`"))?;
            if !(exponent >= 2.0 && exponent.is_finite()) {
                return Err(bad("exponent must be at least 2"));
            }
            Ok(Potential::PowerAttraction { exponent })
        }
        other => Err(PotentialError::UnknownPotential(other.to_string())),
    }
}

impl Potential {
    pub fn quadratic() -> Self {
        Potential::Quadratic { strength: 1.0, center: None }
    }

    pub fn linear_drift(slope: Vec<f64>) -> Self {
        Potential::LinearDrift { slope }
    }

    pub fn modulated(self, amplitude: f64, frequency: f64) -> Self {
        Potential::Modulated { base: Box::new(self), amplitude, frequency }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Quadratic { strength, .. } => *strength == 0.0,
            Potential::LinearDrift { slope } => slope.iter().all(|c| *c == 0.0),
            Potential::PowerAttraction { .. } => false,
            Potential::Modulated { base, .. } => base.is_zero(),
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Potential::Modulated { .. })
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic { strength, center } => {
                let r2: f64 = match center {
                    Some(c) => x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum(),
                    None => x.iter().map(|a| a * a).sum(),
                };
                0.5 * strength * r2
            }
            Potential::LinearDrift { slope } => x.iter().zip(slope).map(|(a, b)| a * b).sum(),
            Potential::PowerAttraction { exponent } => norm(x).powf(*exponent) / exponent,
            Potential::Modulated { base, amplitude, frequency } => {
                (1.0 + amplitude * (frequency * t).sin()) * base.value(t, x)
            }
        }
    }

    /// `out += weight · ∇f(t, x)`.
    pub fn accumulate_gradient(&self, t: f64, x: &[f64], weight: f64, out: &mut [f64]) {
        match self {
            Potential::Zero => {}
            Potential::Quadratic { strength, center } => {
                let w = weight * strength;
                match center {
                    Some(c) => {
                        for ((o, a), b) in out.iter_mut().zip(x).zip(c) {
                            *o += w * (a - b);
                        }
                    }
                    None => {
                        for (o, a) in out.iter_mut().zip(x) {
                            *o += w * a;
                        }
                    }
                }
            }
            Potential::LinearDrift { slope } => {
                for (o, a) in out.iter_mut().zip(slope) {
                    *o += weight * a;
                }
            }
            Potential::PowerAttraction { exponent } => {
                let r = norm(x);
                if r > 0.0 {
                    let w = weight * r.powf(exponent - 2.0);
                    for (o, a) in out.iter_mut().zip(x) {
                        *o += w * a;
                    }
                }
            }
            Potential::Modulated { base, amplitude, frequency } => {
                base.accumulate_gradient(t, x, weight * (1.0 + amplitude * (frequency * t).sin()), out)
            }
        }
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.accumulate_gradient(t, x, 1.0, &mut g);
        g
    }

    /// Declared geodesic-convexity constant on the sets where the potential
    /// is used (`Ω − Ω` for interaction, `Ω` for external; both contain
    /// the origin's neighbourhood for the power family).
    pub fn lambda(&self) -> f64 {
        self.lambda_on_ball(f64::INFINITY)
    }

    /// Convexity constant on the centred ball of radius `r`; this is the
    /// smallest Hessian eigenvalue over the ball.
    pub fn lambda_on_ball(&self, r: f64) -> f64 {
        let _ = r;
        match self {
            Potential::Zero | Potential::LinearDrift { .. } => 0.0,
            Potential::Quadratic { strength, .. } => *strength,
            // Hessian |x|^{p-2}(I + (p-2) x̂x̂ᵀ) has smallest eigenvalue
            // |x|^{p-2}, which vanishes at the origin for p > 2.
            Potential::PowerAttraction { exponent } => {
                if *exponent == 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Potential::Modulated { base, amplitude, .. } => {
                let l = base.lambda_on_ball(r);
                if l >= 0.0 {
                    (1.0 - amplitude.abs()) * l
                } else {
                    (1.0 + amplitude.abs()) * l
                }
            }
        }
    }

    /// `sup_{|x| ≤ r} |∇f(x)|` (uniform in time for modulated potentials).
    pub fn grad_sup_bound(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic { strength, center } => {
                strength * (r + center.as_deref().map(norm).unwrap_or(0.0))
            }
            Potential::LinearDrift { slope } => norm(slope),
            Potential::PowerAttraction { exponent } => r.powf(exponent - 1.0),
            Potential::Modulated { base, amplitude, .. } => (1.0 + amplitude.abs()) * base.grad_sup_bound(r),
        }
    }

    /// Constant `C` with `|∇f(x)| ≤ C(1 + |x|)` everywhere, if one exists.
    pub fn linear_growth_constant(&self) -> Option<f64> {
        match self {
            Potential::Zero => Some(0.0),
            Potential::Quadratic { strength, center } => {
                Some(strength * center.as_deref().map(norm).unwrap_or(0.0).max(1.0))
            }
            Potential::LinearDrift { slope } => Some(norm(slope)),
            Potential::PowerAttraction { exponent } => (*exponent == 2.0).then_some(1.0),
            Potential::Modulated { base, amplitude, .. } => {
                base.linear_growth_constant().map(|c| (1.0 + amplitude.abs()) * c)
            }
        }
    }
}

/// Nested centred balls `K_k` with per-level convexity constants of W
/// (on `K_k − K_k`) and V (on `K_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityLadder {
    radii: Vec<f64>,
    lambdas_w: Vec<f64>,
    lambdas_v: Vec<f64>,
}

impl ConvexityLadder {
    pub fn new(radii: Vec<f64>, w: &Potential, v: &Potential) -> Result<Self, PotentialError> {
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|p| p[1] <= p[0]) {
            return Err(PotentialError::InvalidParameter {
                name: "ladder".into(),
                reason: "radii must be positive and strictly increasing".into(),
            });
        }
        let lambdas_w = radii.iter().map(|r| w.lambda_on_ball(2.0 * r)).collect();
        let lambdas_v = radii.iter().map(|r| v.lambda_on_ball(*r)).collect();
        Ok(ConvexityLadder { radii, lambdas_w, lambdas_v })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn lambdas_w(&self) -> &[f64] {
        &self.lambdas_w
    }

    pub fn lambdas_v(&self) -> &[f64] {
        &self.lambdas_v
    }

    /// Index of the first level whose ball contains radius `r`, doubling
    /// the outermost radius until the ladder covers it.
    pub fn level_for(&mut self, r: f64, w: &Potential, v: &Potential) -> usize {
        while *self.radii.last().expect("nonempty ladder") < r {
            let next = 2.0 * self.radii.last().unwrap();
            self.radii.push(next);
            self.lambdas_w.push(w.lambda_on_ball(2.0 * next));
            self.lambdas_v.push(v.lambda_on_ball(next));
        }
        self.radii.iter().position(|&rk| rk >= r).expect("ladder covers r")
    }

    /// Local stability exponent at level `k` for an η-prox-regular domain:
    /// `−λ_{W,k}⁻ − λ_{V,k} + (‖∇W‖_{Ω_k−Ω_k} + ‖∇V‖_{Ω_k}) / η`.
    pub fn local_exponent(&self, k: usize, w: &Potential, v: &Potential, eta: f64) -> f64 {
        let rk = self.radii[k];
        let boundary = if eta.is_infinite() {
            0.0
        } else {
            (w.grad_sup_bound(2.0 * rk) + v.grad_sup_bound(rk)) / eta
        };
        -self.lambdas_w[k].min(0.0) - self.lambdas_v[k] + boundary
    }
}

/// Upper bound for `sup_{x,y ∈ Ω} |∇W(x − y)|`.
pub fn grad_sup_on_difference_set(w: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    if w.is_zero() {
        return Ok(0.0);
    }
    if !domain.is_bounded() {
        return Err(PotentialError::UnboundedDomain);
    }
    Ok(w.grad_sup_bound(domain.diameter()))
}

/// Upper bound for `sup_{x ∈ Ω} |∇V(x)|`.
pub fn grad_sup_on_domain(v: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    if v.is_zero() {
        return Ok(0.0);
    }
    if let Potential::LinearDrift { slope } = v {
        return Ok(norm(slope));
    }
    if !domain.is_bounded() {
        return Err(PotentialError::UnboundedDomain);
    }
    Ok(v.grad_sup_bound(domain.max_norm()))
}

fn boundary_term(w: &Potential, v: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    let eta = domain.eta();
    if eta.is_infinite() {
        return Ok(0.0);
    }
    let g = grad_sup_on_difference_set(w, domain)? + grad_sup_on_domain(v, domain)?;
    Ok(if g == 0.0 { 0.0 } else { g / eta })
}

/// Stability exponent `κ = −λ_W⁻ − λ_V + (‖∇W‖_{Ω−Ω} + ‖∇V‖_Ω)/η`;
/// the η-term vanishes on convex domains.
pub fn contraction_exponent(w: &Potential, v: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    Ok(-w.lambda().min(0.0) - v.lambda() + boundary_term(w, v, domain)?)
}

/// Exponent of the decay bound for the distance to singletons with V ≡ 0,
/// in its weaker stated form `−λ_W + ‖∇W‖_{Ω−Ω}/η`.
pub fn singleton_decay_exponent(w: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    Ok(-w.lambda() + boundary_term(w, &Potential::Zero, domain)?)
}

/// Aggregation rate `−λ_W + ‖∇W‖_{Ω−Ω}/(2η)`; for the quadratic interaction
/// this is `−1 + Diam(Ω)/(2η)`, negative exactly when `η > Diam(Ω)/2`.
pub fn aggregation_exponent(w: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    Ok(-w.lambda() + boundary_term(w, &Potential::Zero, domain)? / 2.0)
}

/// EVI coefficient `λ_W⁻/2 + λ_V/2 − (‖∇W‖ + ‖∇V‖)/(2η)`.
pub fn evi_coefficient(w: &Potential, v: &Potential, domain: &Domain) -> Result<f64, PotentialError> {
    Ok(-0.5 * contraction_exponent(w, v, domain)?)
}
