//! Small descriptive-statistics helpers shared across modules.

use crate::scalar::Real;

pub fn mean<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    x.iter().copied().sum::<T>() / T::count(x.len())
}

/// Population variance (divides by `n`).
pub fn variance<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let m = mean(x);
    x.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::count(x.len())
}

/// Population standard deviation.
pub fn std_dev<T: Real>(x: &[T]) -> T {
    variance(x).sqrt()
}

/// Quantile with linear interpolation between order statistics of `sorted`.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    match sorted.len() {
        0 => T::zero(),
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = T::lit(pos - lo as f64);
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn sorted_copy<T: Real>(x: &[T]) -> Vec<T> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    s
}

pub fn median<T: Real>(x: &[T]) -> T {
    quantile_sorted(&sorted_copy(x), 0.5)
}

/// Interquartile range of an unsorted sample.
pub fn iqr<T: Real>(x: &[T]) -> T {
    let s = sorted_copy(x);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// Standardized third and excess fourth central moments; `(0, 0)` when the sample has no spread.
pub fn skew_kurtosis<T: Real>(x: &[T]) -> (T, T) {
    if x.len() < 2 {
        return (T::zero(), T::zero());
    }
    let n = T::count(x.len());
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for &v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // relative floor keeps rounding noise on constant input from producing huge moments
    let scale = x.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    if m2 <= T::epsilon() * T::epsilon() * scale * scale * T::lit(16.0) || m2 == T::zero() {
        return (T::zero(), T::zero());
    }
    (m3 / m2.powf(T::lit(1.5)), m4 / (m2 * m2) - T::lit(3.0))
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == T::zero() {
        return (T::zero(), my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles_interpolate() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(median(&x), 2.5);
        assert_abs_diff_eq!(iqr(&x), 1.5);
        assert_abs_diff_eq!(median(&[5.0]), 5.0);
    }

    #[test]
    fn moments() {
        let (s, k) = skew_kurtosis(&[1.0, -1.0, 1.0, -1.0]);
        assert_abs_diff_eq!(s, 0.0);
        assert_abs_diff_eq!(k, -2.0, epsilon = 1e-12);
        assert_eq!(skew_kurtosis(&[3.0; 10]), (0.0, 0.0));
        assert_eq!(skew_kurtosis(&[0.1f64; 10]), (0.0, 0.0));
    }

    #[test]
    fn fit_line() {
        let (m, b) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
    }
}
