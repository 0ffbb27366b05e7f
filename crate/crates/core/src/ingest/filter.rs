//! Butterworth band-pass design and zero-phase (forward-backward) filtering.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One biquad `b0 + b1 z^-1 + b2 z^-2 / 1 + a1 z^-1 + a2 z^-2`, stored in f64.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        let den = self.a[0] + self.a[1] + self.a[2];
        (self.b[0] + self.b[1] + self.b[2]) / den
    }
}

#[derive(Clone, Copy, Debug)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn add(self, o: C64) -> C64 {
        C64::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: C64) -> C64 {
        C64::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: C64) -> C64 {
        C64::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
    fn scale(self, k: f64) -> C64 {
        C64::new(self.re * k, self.im * k)
    }
    fn div(self, o: C64) -> C64 {
        let d = o.re * o.re + o.im * o.im;
        C64::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn sqrt(self) -> C64 {
        let r = self.abs();
        let re = ((r + self.re) / 2.0).max(0.0).sqrt();
        let im = ((r - self.re) / 2.0).max(0.0).sqrt();
        C64::new(re, if self.im < 0.0 { -im } else { im })
    }
}

/// Digital Butterworth band-pass of the given prototype order as second-order sections.
///
/// The low-pass prototype of order `order` becomes a band-pass of order `2·order`,
/// realised as `order` biquads; the overall gain is 1 at the geometric centre frequency.
pub fn butterworth_bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<Vec<Biquad>> {
    let nyquist = fs / 2.0;
    if !(low > 0.0 && low < high && high < nyquist) {
        return Err(Error::BandOutsideNyquist { low, high, nyquist });
    }
    if order == 0 {
        return Err(Error::Invalid("filter order must be at least 1".into()));
    }
    let fs2 = 2.0 * fs;
    // pre-warped analog edges (rad/s)
    let w1 = fs2 * (std::f64::consts::PI * low / fs).tan();
    let w2 = fs2 * (std::f64::consts::PI * high / fs).tan();
    let bw = w2 - w1;
    let w0sq = w1 * w2;

    let mut sections = Vec::with_capacity(order);
    for k in 0..order {
        // upper-half-plane-ish prototype pole; its band-pass images come in conjugate pairs
        let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let p = C64::new(theta.cos(), theta.sin());
        if p.im < -1e-12 {
            continue;
        }
        let half = p.scale(bw / 2.0);
        let disc = half.mul(half).sub(C64::new(w0sq, 0.0)).sqrt();
        // bilinear transform z = (fs2 + s) / (fs2 - s)
        let bilinear = |s: C64| C64::new(fs2, 0.0).add(s).div(C64::new(fs2, 0.0).sub(s));
        let (za, zb) = (bilinear(half.add(disc)), bilinear(half.sub(disc)));
        if p.im.abs() < 1e-12 {
            // real prototype pole (odd order): its two images share one section
            let sum = za.add(zb);
            let prod = za.mul(zb);
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -sum.re, prod.re],
            });
        } else {
            for z in [za, zb] {
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [1.0, -2.0 * z.re, z.re * z.re + z.im * z.im],
                });
            }
        }
    }
    // normalise the cascade to unit gain at the centre frequency
    let wc = 2.0 * (w0sq.sqrt() / fs2).atan();
    let z1 = C64::new(wc.cos(), -wc.sin());
    let z2 = z1.mul(z1);
    let mut gain = 1.0;
    for s in &sections {
        let num = C64::new(s.b[0], 0.0)
            .add(z1.scale(s.b[1]))
            .add(z2.scale(s.b[2]));
        let den = C64::new(s.a[0], 0.0)
            .add(z1.scale(s.a[1]))
            .add(z2.scale(s.a[2]));
        gain *= num.div(den).abs();
    }
    if let Some(first) = sections.first_mut() {
        for b in &mut first.b {
            *b /= gain;
        }
    }
    Ok(sections)
}

/// Magnitude response of a cascade at frequency `f` (Hz).
pub fn magnitude_response(sections: &[Biquad], f: f64, fs: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f / fs;
    let z1 = C64::new(w.cos(), -w.sin());
    let z2 = z1.mul(z1);
    sections
        .iter()
        .map(|s| {
            let num = C64::new(s.b[0], 0.0)
                .add(z1.scale(s.b[1]))
                .add(z2.scale(s.b[2]));
            let den = C64::new(s.a[0], 0.0)
                .add(z1.scale(s.a[1]))
                .add(z2.scale(s.a[2]));
            num.div(den).abs()
        })
        .product()
}

/// Runs the cascade in transposed direct form II, starting each section at the
/// steady state for a constant input equal to `x[0]`.
fn cascade(sections: &[Biquad], x: &mut [f64]) {
    let Some(&x0) = x.first() else { return };
    let mut level = x0;
    for s in sections {
        let y_ss = s.dc_gain() * level;
        let mut z1 = y_ss - s.b[0] * level;
        let mut z2 = s.b[2] * level - s.a[2] * y_ss;
        for v in x.iter_mut() {
            let xin = *v;
            let y = s.b[0] * xin + z1;
            z1 = s.b[1] * xin - s.a[1] * y + z2;
            z2 = s.b[2] * xin - s.a[2] * y;
            *v = y;
        }
        level = y_ss;
    }
}

/// Zero-phase filtering: odd-extension padding, forward pass, backward pass.
pub fn filtfilt<T: Real>(sections: &[Biquad], x: &[T]) -> Result<Vec<T>> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let n = x.len();
    if n < 2 {
        return Ok(x.to_vec());
    }
    let pad = (3 * (2 * sections.len() + 1)).min(n - 1);
    let first = x[0].as_f64();
    let last = x[n - 1].as_f64();
    let mut buf = Vec::with_capacity(n + 2 * pad);
    buf.extend((1..=pad).rev().map(|i| 2.0 * first - x[i].as_f64()));
    buf.extend(x.iter().map(|v| v.as_f64()));
    buf.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i].as_f64()));
    cascade(sections, &mut buf);
    buf.reverse();
    cascade(sections, &mut buf);
    buf.reverse();
    Ok(buf[pad..pad + n].iter().map(|&v| T::lit(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bandpass_response_shape() {
        let s = butterworth_bandpass(4, 0.5, 35.0, 250.0).unwrap();
        assert_eq!(s.len(), 4);
        // -3 dB at both edges, ~unity in band, steep outside
        assert_abs_diff_eq!(
            magnitude_response(&s, 0.5, 250.0),
            0.5f64.sqrt(),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            magnitude_response(&s, 35.0, 250.0),
            0.5f64.sqrt(),
            epsilon = 1e-6
        );
        assert!((magnitude_response(&s, 10.0, 250.0) - 1.0).abs() < 1e-3);
        assert_abs_diff_eq!(
            magnitude_response(&s, 50.0, 250.0),
            0.168117,
            epsilon = 1e-5
        );
        assert!(magnitude_response(&s, 0.05, 250.0) < 1e-3);
    }

    #[test]
    fn odd_order_design() {
        let s = butterworth_bandpass(3, 1.0, 20.0, 100.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_abs_diff_eq!(
            magnitude_response(&s, 1.0, 100.0),
            0.5f64.sqrt(),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            magnitude_response(&s, 20.0, 100.0),
            0.5f64.sqrt(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn band_must_fit_nyquist() {
        assert!(matches!(
            butterworth_bandpass(4, 0.5, 130.0, 256.0),
            Err(Error::BandOutsideNyquist { .. })
        ));
        assert!(butterworth_bandpass(4, 0.0, 35.0, 256.0).is_err());
        assert!(butterworth_bandpass(4, 35.0, 0.5, 256.0).is_err());
    }
}
