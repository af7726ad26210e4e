//! Independent reference solvers for small instances, used to cross-check
//! the simplex. Neither shares code with it.

use crate::measures::ParticleMeasure;

use super::TransportError;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance between two equal-count, equal-mass measures by
/// exhaustive enumeration of all `n!` assignments (Heap's algorithm).
pub fn permutation_oracle(mu: &ParticleMeasure, nu: &ParticleMeasure) -> Result<f64, TransportError> {
    let n = mu.len();
    if nu.len() != n {
        return Err(TransportError::OracleMismatch("counts differ".into()));
    }
    if n > 9 {
        return Err(TransportError::OracleMismatch(format!("{n}! assignments is too many")));
    }
    let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sq_dist(mu.position(i), nu.position(j))).collect()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
    let mut best = eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best / n as f64)
}

/// Splits every particle into `m_i · q` shards of mass `1/q`. Fails unless
/// every `m_i · q` is an integer within 1e-9.
pub fn shard_points(mu: &ParticleMeasure, q: usize) -> Result<Vec<Vec<f64>>, TransportError> {
    let mut out = Vec::with_capacity(q);
    for (x, m) in mu.iter() {
        let k = m * q as f64;
        let kr = k.round();
        if (k - kr).abs() > 1e-9 {
            return Err(TransportError::OracleMismatch(format!("mass {m} is not a multiple of 1/{q}")));
        }
        for _ in 0..kr as usize {
            out.push(x.to_vec());
        }
    }
    if out.len() != q {
        return Err(TransportError::OracleMismatch("shard count differs from q".into()));
    }
    Ok(out)
}

/// Squared distance for masses with common denominator `q` (up to 20),
/// reduced to an equal-mass assignment between shards and solved exactly
/// by dynamic programming over subsets of target shards.
pub fn shard_oracle(mu: &ParticleMeasure, nu: &ParticleMeasure, q: usize) -> Result<f64, TransportError> {
    if q == 0 || q > 20 {
        return Err(TransportError::OracleMismatch(format!("q = {q} out of range")));
    }
    let xs = shard_points(mu, q)?;
    let ys = shard_points(nu, q)?;
    // best[S] = minimum cost assigning the first |S| sources onto S.
    let full = 1usize << q;
    let mut best = vec![f64::INFINITY; full];
    best[0] = 0.0;
    for s in 0..full {
        let cur = best[s];
        if !cur.is_finite() {
            continue;
        }
        let i = s.count_ones() as usize;
        if i == q {
            continue;
        }
        for (j, y) in ys.iter().enumerate() {
            if s & (1 << j) == 0 {
                let t = s | (1 << j);
                let c = cur + sq_dist(&xs[i], y);
                if c < best[t] {
                    best[t] = c;
                }
            }
        }
    }
    Ok(best[full - 1] / q as f64)
}
