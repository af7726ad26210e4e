use super::{dot, norm, TOL_NUM};

/// Finitely generated closed convex cone with apex at the origin.
///
/// Used for normal cones. Generators are unit vectors; the cone with no
/// generators is `{0}`, the normal cone at an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    dim: usize,
    generators: Vec<Vec<f64>>,
}

impl Cone {
    pub fn zero(dim: usize) -> Self {
        Cone { dim, generators: Vec::new() }
    }

    /// Builds a cone from arbitrary nonzero directions. Directions are
    /// normalised and near-duplicates are merged.
    pub fn from_directions(dim: usize, directions: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut generators: Vec<Vec<f64>> = Vec::new();
        for d in directions {
            debug_assert_eq!(d.len(), dim);
            let n = norm(&d);
            if n <= f64::EPSILON {
                continue;
            }
            let u: Vec<f64> = d.iter().map(|c| c / n).collect();
            if generators.iter().all(|g| dot(g, &u) < 1.0 - 1e-12) {
                generators.push(u);
            }
        }
        Cone { dim, generators }
    }

    pub fn ray(direction: Vec<f64>) -> Self {
        let dim = direction.len();
        Cone::from_directions(dim, [direction])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn is_zero(&self) -> bool {
        self.generators.is_empty()
    }

    /// Projection of `v` onto the polar (tangent) cone.
    pub fn project_polar(&self, v: &[f64]) -> Vec<f64> {
        moreau_decompose(v, self).0
    }

    /// Projection of `v` onto the cone itself.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        moreau_decompose(v, self).1
    }

    /// Draws a unit vector from the cone as a random convex combination of
    /// generators. Returns `None` for the zero cone.
    pub fn sample_unit<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<f64>> {
        if self.generators.is_empty() {
            return None;
        }
        loop {
            let mut v = vec![0.0; self.dim];
            for g in &self.generators {
                let w: f64 = rng.gen();
                for (vi, gi) in v.iter_mut().zip(g) {
                    *vi += w * gi;
                }
            }
            let n = norm(&v);
            if n > 1e-6 {
                return Some(v.into_iter().map(|c| c / n).collect());
            }
        }
    }
}

/// Splits `v` into `(v_T, v_N)` with `v_N` the projection onto `cone`,
/// `v_T` the projection onto its polar, `v = v_T + v_N` and
/// `⟨v_T, v_N⟩ = 0`.
pub fn moreau_decompose(v: &[f64], cone: &Cone) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(v.len(), cone.dim);
    let gens = &cone.generators;
    let v_n = match gens.len() {
        0 => vec![0.0; v.len()],
        1 => {
            let a = dot(v, &gens[0]);
            if a > 0.0 {
                gens[0].iter().map(|g| a * g).collect()
            } else {
                vec![0.0; v.len()]
            }
        }
        2 => project_two_generator(v, &gens[0], &gens[1]),
        _ => {
            let v_t = dykstra_polar(v, gens);
            return split_from_tangent(v, v_t);
        }
    };
    let v_t: Vec<f64> = v.iter().zip(&v_n).map(|(a, b)| a - b).collect();
    (v_t, v_n)
}

fn split_from_tangent(v: &[f64], v_t: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let v_n = v.iter().zip(&v_t).map(|(a, b)| a - b).collect();
    (v_t, v_n)
}

// Exact projection onto cone{g1, g2}: the nearest of the admissible face
// candidates (relative interior of the 2-face, either ray, the apex).
fn project_two_generator(v: &[f64], g1: &[f64], g2: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut best = vec![0.0; d];
    let mut best_res = dot(v, v);
    let mut consider = |c: Vec<f64>| {
        let r: f64 = v.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
        if r < best_res {
            best_res = r;
            best = c;
        }
    };

    let c12 = dot(g1, g2);
    let b1 = dot(g1, v);
    let b2 = dot(g2, v);
    let det = 1.0 - c12 * c12;
    if det > 1e-14 {
        let a = (b1 - c12 * b2) / det;
        let b = (b2 - c12 * b1) / det;
        if a >= 0.0 && b >= 0.0 {
            consider(g1.iter().zip(g2).map(|(x, y)| a * x + b * y).collect());
        }
    }
    if b1 > 0.0 {
        consider(g1.iter().map(|x| b1 * x).collect());
    }
    if b2 > 0.0 {
        consider(g2.iter().map(|x| b2 * x).collect());
    }
    best
}

// Dykstra's alternating projections onto the half-spaces {⟨g, w⟩ ≤ 0},
// whose intersection is the polar cone.
fn dykstra_polar(v: &[f64], gens: &[Vec<f64>]) -> Vec<f64> {
    let d = v.len();
    let mut x = v.to_vec();
    let mut increments = vec![vec![0.0; d]; gens.len()];
    let scale = 1.0 + norm(v);
    for _ in 0..10_000 {
        let mut change = 0.0f64;
        for (g, inc) in gens.iter().zip(increments.iter_mut()) {
            let y: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let s = dot(g, &y);
            let proj: Vec<f64> = if s > 0.0 {
                y.iter().zip(g).map(|(a, b)| a - s * b).collect()
            } else {
                y.clone()
            };
            for k in 0..d {
                inc[k] = y[k] - proj[k];
                change = change.max((proj[k] - x[k]).abs());
            }
            x = proj;
        }
        if change <= TOL_NUM * 1e-2 * scale {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn axis_aligned_split() {
        let (t, n) = moreau_decompose(&[1.0, 1.0], &Cone::ray(vec![1.0, 0.0]));
        assert!(close(&n, &[1.0, 0.0], 1e-15));
        assert!(close(&t, &[0.0, 1.0], 1e-15));
    }

    #[test]
    fn zero_cone_is_identity() {
        let v = [0.3, -7.0];
        let (t, n) = moreau_decompose(&v, &Cone::zero(2));
        assert_eq!(t, v.to_vec());
        assert_eq!(n, vec![0.0, 0.0]);
    }

    #[test]
    fn vector_in_polar_of_corner_cone() {
        let cone = Cone::from_directions(2, [vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = [-1.0, -1.0];
        let (t, n) = moreau_decompose(&v, &cone);
        assert!(close(&n, &[0.0, 0.0], 1e-15));
        assert!(close(&t, &v, 1e-15));

        // Optimality by brute force: no point of the cone on a grid is
        // closer to v than the computed projection.
        let best = (n[0] - v[0]).hypot(n[1] - v[1]);
        for i in 0..=50 {
            for j in 0..=50 {
                let c = [i as f64 * 0.1, j as f64 * 0.1];
                assert!((c[0] - v[0]).hypot(c[1] - v[1]) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn vector_inside_corner_cone_is_all_normal() {
        let cone = Cone::from_directions(2, [vec![1.0, 0.0], vec![0.0, 1.0]]);
        let (t, n) = moreau_decompose(&[2.0, 0.5], &cone);
        assert!(close(&t, &[0.0, 0.0], 1e-15));
        assert!(close(&n, &[2.0, 0.5], 1e-15));
    }

    #[test]
    fn three_generator_cone_uses_dykstra() {
        let cone = Cone::from_directions(
            3,
            [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        );
        let (t, n) = moreau_decompose(&[1.0, -2.0, 3.0], &cone);
        assert!(close(&n, &[1.0, 0.0, 3.0], 1e-12));
        assert!(close(&t, &[0.0, -2.0, 0.0], 1e-12));
    }

    #[test]
    fn skew_three_generator_cone_matches_enumeration() {
        // Cone in ℝ³ with non-orthogonal generators; compare to exhaustive
        // search over nonnegative combinations on a fine grid.
        let cone = Cone::from_directions(
            3,
            [vec![1.0, 0.2, 0.0], vec![0.1, 1.0, 0.3], vec![0.0, 0.4, 1.0]],
        );
        let v = [0.7, -0.4, 1.1];
        let (t, n) = moreau_decompose(&v, &cone);
        assert!(dot(&t, &n).abs() < 1e-9);
        let best = crate::geometry::dist(&n, &v);
        let g = cone.generators();
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let (a, b, c) = (
                        1.5 * i as f64 / steps as f64,
                        1.5 * j as f64 / steps as f64,
                        1.5 * k as f64 / steps as f64,
                    );
                    let p: Vec<f64> = (0..3).map(|d| a * g[0][d] + b * g[1][d] + c * g[2][d]).collect();
                    assert!(crate::geometry::dist(&p, &v) >= best - 1e-9);
                }
            }
        }
    }

    #[test]
    fn duplicate_directions_are_merged() {
        let cone = Cone::from_directions(2, [vec![2.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(cone.generators().len(), 1);
    }
}
