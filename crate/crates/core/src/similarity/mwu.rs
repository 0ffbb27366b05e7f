//! Mann-Whitney U test with midranks: normal approximation (tie and continuity
//! corrected) and an exact null distribution for small samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest combined sample size accepted by [`mann_whitney_exact`].
pub const EXACT_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Normal,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the first sample: pairs `(a, b)` with `a > b`, ties counting one half.
    pub u: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// `(U − n_a n_b / 2) / σ` without continuity correction; 0 when σ = 0.
    pub z: f64,
    pub p_two_sided: f64,
    /// Alternative: the first sample tends to be larger.
    pub p_greater: f64,
    pub p_less: f64,
    pub method: PMethod,
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Mann-Whitney needs two non-empty samples"));
    }
    if let Some(i) = a.iter().chain(b).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// Midranks (1-based) of the concatenation `a ++ b` and the tie sizes.
fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&i, &j| all[i].total_cmp(&all[j]));
    let mut ranks = vec![0.0; all.len()];
    let mut ties = Vec::new();
    let mut s = 0;
    while s < order.len() {
        let mut e = s + 1;
        while e < order.len() && all[order[e]] == all[order[s]] {
            e += 1;
        }
        let r = (s + e + 1) as f64 / 2.0;
        for &i in &order[s..e] {
            ranks[i] = r;
        }
        ties.push(e - s);
        s = e;
    }
    (ranks, ties)
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (na, nb) = (a.len(), b.len());
    let (ranks, ties) = midranks(a, b);
    let r_a: f64 = ranks[..na].iter().sum();
    let u = r_a - (na * (na + 1)) as f64 / 2.0;
    let n = (na + nb) as f64;
    let mu = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)).max(1.0));
    let (z, p_greater, p_less, p_two_sided) = if var > 0.0 {
        let sd = var.sqrt();
        let pg = normal_sf((u - mu - 0.5) / sd);
        let pl = normal_sf((mu - u - 0.5) / sd);
        let pt = (2.0 * normal_sf(((u - mu).abs() - 0.5) / sd)).min(1.0);
        ((u - mu) / sd, pg.min(1.0), pl.min(1.0), pt)
    } else {
        (0.0, 1.0, 1.0, 1.0)
    };
    Ok(MannWhitney {
        u,
        n_a: na,
        n_b: nb,
        z,
        p_two_sided,
        p_greater,
        p_less,
        method: PMethod::Normal,
    })
}

/// Exact permutation distribution of the midrank sum of `a` (ties kept as observed).
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    if n > EXACT_LIMIT {
        return Err(Error::Invalid(format!(
            "exact Mann-Whitney limited to {EXACT_LIMIT} observations, got {n}"
        )));
    }
    let (ranks, _) = midranks(a, b);
    // doubled midranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; na + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let (src, dst) = (&lower[k - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                dst[s] += src[s - r];
            }
        }
    }
    let dist = &ways[na];
    let total: f64 = dist.iter().sum();
    let obs: usize = doubled[..na].iter().sum();
    let p_greater = dist[obs..].iter().sum::<f64>() / total;
    let p_less = dist[..=obs].iter().sum::<f64>() / total;
    let u = ranks[..na].iter().sum::<f64>() - (na * (na + 1)) as f64 / 2.0;
    let normal = mann_whitney_u(a, b)?;
    Ok(MannWhitney {
        u,
        n_a: na,
        n_b: nb,
        z: normal.z,
        p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
        p_greater: p_greater.min(1.0),
        p_less: p_less.min(1.0),
        method: PMethod::Exact,
    })
}
