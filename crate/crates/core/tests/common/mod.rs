//! Brute-force reference implementations written straight from the definitions.
//! Shared with the acceptance suite of the command-line crate.
#![allow(dead_code)]

use std::collections::HashMap;

pub fn population_sd(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn chebyshev_match(x: &[f64], i: usize, j: usize, len: usize, r: f64) -> bool {
    (0..len).all(|k| (x[i + k] - x[j + k]).abs() <= r)
}

/// ApEn = Φ_d − Φ_{d+1}, Φ_m = mean over templates of ln(fraction of templates within r).
pub fn apen(x: &[f64], d: usize, r: f64) -> f64 {
    let phi = |m: usize| {
        let count = x.len() - m + 1;
        (0..count)
            .map(|i| {
                let c = (0..count)
                    .filter(|&j| chebyshev_match(x, i, j, m, r))
                    .count();
                (c as f64 / count as f64).ln()
            })
            .sum::<f64>()
            / count as f64
    };
    phi(d) - phi(d + 1)
}

/// SampEn = −ln(A/B) over the first N − d templates, self-matches excluded; `None` when A or B is 0.
pub fn sampen(x: &[f64], d: usize, r: f64) -> Option<f64> {
    let count = x.len() - d;
    let (mut a, mut b) = (0u64, 0u64);
    for i in 0..count {
        for j in i + 1..count {
            if chebyshev_match(x, i, j, d, r) {
                b += 1;
            }
            if chebyshev_match(x, i, j, d + 1, r) {
                a += 1;
            }
        }
    }
    (a > 0 && b > 0).then(|| -(a as f64 / b as f64).ln())
}

/// Ordinal-pattern Shannon entropy in bits; ties ordered by position.
pub fn permen(x: &[f64], order: usize, tau: usize) -> f64 {
    let count = x.len() - (order - 1) * tau;
    let mut hist: HashMap<Vec<usize>, usize> = HashMap::new();
    for i in 0..count {
        let w: Vec<f64> = (0..order).map(|k| x[i + k * tau]).collect();
        let mut idx: Vec<usize> = (0..order).collect();
        // insertion sort is stable: equal values keep their positional order
        for a in 1..order {
            let mut b = a;
            while b > 0 && w[idx[b - 1]] > w[idx[b]] {
                idx.swap(b - 1, b);
                b -= 1;
            }
        }
        *hist.entry(idx).or_default() += 1;
    }
    hist.values()
        .map(|&c| {
            let p = c as f64 / count as f64;
            -p * p.log2()
        })
        .sum()
}

fn occurs_in(hay: &[u8], needle: &[u8]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

/// LZ76 parse: each phrase extends while it still occurs in the sequence strictly before its
/// last symbol; a phrase that runs off the end without a new symbol is not counted.
pub fn lz76(bits: &[u8]) -> usize {
    let n = bits.len();
    let mut i = 0;
    let mut c = 0;
    while i < n {
        let mut len = 1;
        loop {
            if i + len > n {
                return c;
            }
            if occurs_in(&bits[..i + len - 1], &bits[i..i + len]) {
                len += 1;
            } else {
                break;
            }
        }
        c += 1;
        i += len;
    }
    c
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn lempel_ziv(x: &[f64]) -> f64 {
    let m = median(x);
    let bits: Vec<u8> = x.iter().map(|&v| u8::from(v > m)).collect();
    let n = x.len() as f64;
    lz76(&bits) as f64 * n.log2() / n
}

/// Midrank of every value of `a ++ b`, computed by counting.
fn midranks(all: &[f64]) -> Vec<f64> {
    all.iter()
        .map(|&v| {
            let less = all.iter().filter(|&&w| w < v).count() as f64;
            let equal = all.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact one-sided p-values `(greater, less)` of the rank sum of `a`, by enumerating every
/// assignment of the pooled ranks to the first sample.
pub fn mwu_exact(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let n = all.len();
    let na = a.len();
    let observed: f64 = ranks[..na].iter().sum();
    let (mut total, mut ge, mut le) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let s: f64 = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        total += 1;
        if s >= observed - 1e-9 {
            ge += 1;
        }
        if s <= observed + 1e-9 {
            le += 1;
        }
    }
    let u = observed - (na * (na + 1)) as f64 / 2.0;
    (u, ge as f64 / total as f64, le as f64 / total as f64)
}
