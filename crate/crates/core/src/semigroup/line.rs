//! One-dimensional heat operators on uniform node lines.
//!
//! All quadrature operators here are Toeplitz convolutions with nonnegative
//! weights `w(d)`, `d` the node offset. Anti-symmetric axes use the odd
//! extension, which turns `G(x-y) - G(x+y)` into one convolution.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::geometry::AxisKind;
use crate::numerics::{gauss_1d, norm_cdf};

/// Number of standard deviations of `G_t` kept in the band (tail below 1e-17).
const BAND_SIGMAS: f64 = 12.5;

/// Largest band for which direct summation beats the FFT.
const DIRECT_BAND: usize = 48;

/// Half-width of the weight band for time `t` and spacing `h`.
pub fn band(t: f64, h: f64) -> usize {
    (BAND_SIGMAS * t.sqrt() / h).ceil() as usize + 2
}

fn second_antiderivative_neg(y: f64, s: f64) -> f64 {
    // F2(-y) where F2'' is the N(0, s^2) density and F2(x) = x Phi(x/s) + s phi(x/s).
    let z = y / s;
    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    s * phi - y * norm_cdf(-z)
}

/// Convolution weights `w(d)`, `d = 0..=max_d`.
///
/// For `t >= h^2` these are samples `h G_t(d h)` (trapezoid rule). For smaller
/// times they are exact integrals of `G_t` against the hat function of the
/// node, so the operator stays bounded by 1 and tends to the identity as
/// `t -> 0`.
pub fn weights(t: f64, h: f64, max_d: usize) -> Vec<f64> {
    if t <= 0.0 {
        let mut w = vec![0.0; max_d + 1];
        w[0] = 1.0;
        return w;
    }
    if t >= h * h {
        return (0..=max_d).map(|d| h * gauss_1d(t, d as f64 * h)).collect();
    }
    let s = (2.0 * t).sqrt();
    let f = |y: f64| second_antiderivative_neg(y, s);
    (0..=max_d)
        .map(|d| {
            let w = if d == 0 {
                1.0 - 2.0 * (f(0.0) - f(h)) / h
            } else {
                let x = d as f64 * h;
                (f(x + h) - 2.0 * f(x) + f(x - h)) / h
            };
            w.max(0.0)
        })
        .collect()
}

/// FFT plans shared across applications.
#[derive(Default)]
pub struct FftCache {
    plans: Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>,
}

impl std::fmt::Debug for FftCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FftCache")
    }
}

impl FftCache {
    pub fn get(&self, len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
        let mut plans = self.plans.lock().expect("fft cache poisoned");
        plans
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    }
}

fn good_fft_len(min: usize) -> usize {
    let mut best = min.next_power_of_two();
    let mut p3 = 1;
    while p3 < best {
        let mut p = p3;
        while p < min {
            p *= 2;
        }
        best = best.min(p);
        p3 *= 3;
    }
    best
}

/// `out[i] = sum_j w[|i - j + shift|] input[j]` for `i` in `0..out.len()`,
/// treating `input` as zero outside its range and `w` as zero beyond its length.
fn toeplitz(input: &[f64], w: &[f64], shift: isize, out: &mut [f64], ffts: &FftCache) {
    let b = w.len() - 1;
    let n_in = input.len();
    if b <= DIRECT_BAND {
        for (i, o) in out.iter_mut().enumerate() {
            let c = i as isize + shift;
            let lo = (c - b as isize).max(0) as usize;
            let hi = ((c + b as isize) as usize).min(n_in.saturating_sub(1));
            let mut acc = 0.0;
            if c + (b as isize) >= 0 && lo <= hi {
                for (j, &v) in input.iter().enumerate().take(hi + 1).skip(lo) {
                    acc += w[(c - j as isize).unsigned_abs()] * v;
                }
            }
            *o = acc;
        }
        return;
    }
    // circular convolution long enough to avoid wrap-around for the requested outputs
    let reach = (out.len() as isize + shift.abs() + 1) as usize;
    let len = good_fft_len(n_in.max(reach) + b + out.len() + shift.unsigned_abs() + 1);
    let mut a: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
    for (j, &v) in input.iter().enumerate() {
        a[j] = Complex::new(v, 0.0);
    }
    let mut k: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
    for (d, &wd) in w.iter().enumerate().take(b.min(len / 2 - 1) + 1) {
        k[d] = Complex::new(wd, 0.0);
        if d > 0 {
            k[len - d] = Complex::new(wd, 0.0);
        }
    }
    let fwd = ffts.get(len, false);
    let inv = ffts.get(len, true);
    fwd.process(&mut a);
    fwd.process(&mut k);
    for (x, y) in a.iter_mut().zip(&k) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / len as f64;
    for (i, o) in out.iter_mut().enumerate() {
        let idx = (i as isize + shift).rem_euclid(len as isize) as usize;
        *o = a[idx].re * scale;
    }
}

/// Precomputed quadrature operator for one axis and one time.
#[derive(Clone, Debug)]
pub struct LineKernel {
    kind: AxisKind,
    n: usize,
    w: Vec<f64>,
}

impl LineKernel {
    pub fn new(kind: AxisKind, n: usize, h: f64, t: f64) -> Self {
        let limit = match kind {
            AxisKind::AntiSymmetric => 2 * n + 2,
            AxisKind::Dirichlet => n,
            AxisKind::Periodic => usize::MAX,
        };
        let b = band(t, h).min(limit);
        LineKernel { kind, n, w: weights(t, h, b) }
    }

    fn w_at(&self, d: usize) -> f64 {
        self.w.get(d).copied().unwrap_or(0.0)
    }

    /// Matrix entry coupling output node `p` to input node `q`.
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        match self.kind {
            AxisKind::AntiSymmetric => (self.w_at(p.abs_diff(q)) - self.w_at(p + q + 2)).max(0.0),
            AxisKind::Dirichlet => self.w_at(p.abs_diff(q)),
            AxisKind::Periodic => {
                let n = self.n as isize;
                let d = p as isize - q as isize;
                let reach = (self.w.len() as isize) / n + 2;
                (-reach..=reach)
                    .map(|k| self.w_at((d + k * n).unsigned_abs()))
                    .sum()
            }
        }
    }

    pub fn apply(&self, input: &[f64], out: &mut [f64], ffts: &FftCache) {
        let n = self.n;
        let b = self.w.len() - 1;
        match self.kind {
            AxisKind::Dirichlet => toeplitz(input, &self.w, 0, out, ffts),
            AxisKind::AntiSymmetric => {
                if b <= DIRECT_BAND {
                    for (p, o) in out.iter_mut().enumerate() {
                        let lo = p.saturating_sub(b);
                        let hi = (p + b).min(n - 1);
                        let mut acc = 0.0;
                        for q in lo..=hi {
                            acc += self.entry(p, q) * input[q];
                        }
                        *o = acc;
                    }
                } else {
                    // odd extension on nodes k = -n..=n, stored at index k + n
                    let mut ext = vec![0.0; 2 * n + 1];
                    for q in 0..n {
                        ext[n + 1 + q] = input[q];
                        ext[n - 1 - q] = -input[q];
                    }
                    toeplitz(&ext, &self.w, (n + 1) as isize, out, ffts);
                }
            }
            AxisKind::Periodic => {
                let mut wp = vec![0.0; n];
                for (d, &wd) in self.w.iter().enumerate() {
                    wp[d % n] += wd;
                    if d > 0 {
                        wp[(n - d % n) % n] += wd;
                    }
                }
                if n <= 2 * DIRECT_BAND {
                    for (p, o) in out.iter_mut().enumerate() {
                        *o = (0..n).map(|q| wp[(p + n - q) % n] * input[q]).sum();
                    }
                } else {
                    let fwd = ffts.get(n, false);
                    let inv = ffts.get(n, true);
                    let mut a: Vec<Complex<f64>> = input.iter().map(|&v| Complex::new(v, 0.0)).collect();
                    let mut k: Vec<Complex<f64>> = wp.iter().map(|&v| Complex::new(v, 0.0)).collect();
                    fwd.process(&mut a);
                    fwd.process(&mut k);
                    for (x, y) in a.iter_mut().zip(&k) {
                        *x *= y;
                    }
                    inv.process(&mut a);
                    for (o, v) in out.iter_mut().zip(&a) {
                        *o = v.re / n as f64;
                    }
                }
            }
        }
    }
}

/// Exact heat flow of the discrete sine/Fourier representation on one axis.
#[derive(Clone, Debug)]
pub struct SpectralLine {
    kind: AxisKind,
    n: usize,
    multiplier: Vec<f64>,
}

impl SpectralLine {
    pub fn new(kind: AxisKind, n: usize, h: f64, t: f64) -> Self {
        let len = Self::extended_len(kind, n);
        let period = len as f64 * h;
        let multiplier = (0..len)
            .map(|j| {
                let jj = if j <= len / 2 { j as f64 } else { j as f64 - len as f64 };
                let k = 2.0 * std::f64::consts::PI * jj / period;
                (-t * k * k).exp()
            })
            .collect();
        SpectralLine { kind, n, multiplier }
    }

    /// Length of the periodic extension: `[0, f, 0, -rev f]` for anti-symmetric
    /// axes, `[f, -rev f]` for Dirichlet axes, `f` for periodic axes.
    pub fn extended_len(kind: AxisKind, n: usize) -> usize {
        match kind {
            AxisKind::AntiSymmetric => 2 * (n + 1),
            AxisKind::Dirichlet => 2 * n,
            AxisKind::Periodic => n,
        }
    }

    pub fn apply(&self, input: &[f64], out: &mut [f64], ffts: &FftCache) {
        let n = self.n;
        let len = self.multiplier.len();
        let mut a = vec![Complex::new(0.0, 0.0); len];
        match self.kind {
            AxisKind::AntiSymmetric => {
                for q in 0..n {
                    a[q + 1] = Complex::new(input[q], 0.0);
                    a[len - 1 - q] = Complex::new(-input[q], 0.0);
                }
            }
            AxisKind::Dirichlet => {
                for q in 0..n {
                    a[q] = Complex::new(input[q], 0.0);
                    a[len - 1 - q] = Complex::new(-input[q], 0.0);
                }
            }
            AxisKind::Periodic => {
                for q in 0..n {
                    a[q] = Complex::new(input[q], 0.0);
                }
            }
        }
        ffts.get(len, false).process(&mut a);
        for (x, &m) in a.iter_mut().zip(&self.multiplier) {
            *x *= m;
        }
        ffts.get(len, true).process(&mut a);
        let scale = 1.0 / len as f64;
        let offset = usize::from(self.kind == AxisKind::AntiSymmetric);
        for (q, o) in out.iter_mut().enumerate() {
            *o = a[q + offset].re * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_weights_sum_to_one_and_tend_to_identity() {
        let h = 0.1;
        for &t in &[1e-6, 1e-4, 5e-3] {
            let w = weights(t, h, 60);
            let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
            assert!((total - 1.0).abs() < 1e-13, "t={t} total={total}");
            assert!(w.iter().all(|&v| v >= 0.0));
        }
        // the centre weight approaches 1 like sqrt(t)/h
        assert!((weights(1e-16, 0.1, 3)[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trapezoid_weights_are_a_partition_of_unity() {
        let h = 0.05;
        let t = 0.3;
        let w = weights(t, h, band(t, h));
        let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn direct_and_fft_paths_agree() {
        let n = 300;
        let h = 0.02;
        let input: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin() + 0.3).collect();
        let t = 0.5 * h * h * (DIRECT_BAND as f64 / BAND_SIGMAS).powi(2);
        let small = LineKernel::new(AxisKind::AntiSymmetric, n, h, t);
        assert!(small.w.len() - 1 <= DIRECT_BAND);
        let mut direct = vec![0.0; n];
        small.apply(&input, &mut direct, &FftCache::default());
        // same weights through the FFT path
        let mut ext = vec![0.0; 2 * n + 1];
        for q in 0..n {
            ext[n + 1 + q] = input[q];
            ext[n - 1 - q] = -input[q];
        }
        let mut padded = small.w.clone();
        padded.resize(DIRECT_BAND + 10, 0.0);
        let mut via_fft = vec![0.0; n];
        toeplitz(&ext, &padded, (n + 1) as isize, &mut via_fft, &FftCache::default());
        for (a, b) in direct.iter().zip(&via_fft) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn spectral_sine_mode_decays_exactly() {
        let n = 63;
        let l = 2.0;
        let h = l / (n + 1) as f64;
        let k = std::f64::consts::PI / l;
        let input: Vec<f64> = (0..n).map(|q| (k * (q + 1) as f64 * h).sin()).collect();
        let t = 0.3;
        let line = SpectralLine::new(AxisKind::AntiSymmetric, n, h, t);
        let mut out = vec![0.0; n];
        line.apply(&input, &mut out, &FftCache::default());
        for (o, i) in out.iter().zip(&input) {
            assert!((o - i * (-t * k * k).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_constant_is_fixed_on_periodic_axis() {
        let line = SpectralLine::new(AxisKind::Periodic, 16, 0.25, 3.0);
        let mut out = vec![0.0; 16];
        line.apply(&[2.5; 16], &mut out, &FftCache::default());
        assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }
}
