//! Uniform grids, sampled functions, differentiation and quadrature.
//!
//! Periodic grids use Fourier differentiation; truncated lines use
//! sixth-order finite differences with one-sided stencils near the ends.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Grid {
    /// `n` points on `[a, b)`.
    pub fn periodic(a: f64, b: f64, n: usize) -> Self {
        Grid { a, b, n, periodic: true }
    }

    /// `n` points on `[a, b]`, endpoints included.
    pub fn line(a: f64, b: f64, n: usize) -> Self {
        Grid { a, b, n, periodic: false }
    }

    pub fn h(&self) -> f64 {
        if self.periodic {
            (self.b - self.a) / self.n as f64
        } else {
            (self.b - self.a) / (self.n - 1) as f64
        }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    pub fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("expected {} samples, got {}", self.n, v.len())))
        }
    }

    /// `d^order/dx^order` of samples on this grid.
    pub fn derivative(&self, v: &[f64], order: u32) -> Vec<f64> {
        if self.periodic {
            Spectral::new(self.n, self.length()).derivative(v, order)
        } else {
            fd_derivative(v, self.h(), order)
        }
    }

    /// `∫ v dx` over the grid (trapezoid on periodic grids, which is
    /// spectrally accurate there; composite Simpson on lines).
    pub fn integrate(&self, v: &[f64]) -> f64 {
        let h = self.h();
        if self.periodic {
            return h * v.iter().sum::<f64>();
        }
        simpson(v, h)
    }

    /// `F(x_i) = ∫_{a}^{x_i} v`, fourth-order accurate.
    pub fn cumulative(&self, v: &[f64]) -> Vec<f64> {
        cumulative(v, self.h())
    }
}

/// Composite Simpson; the last interval uses the 3/8 rule when the number
/// of intervals is odd.
pub fn simpson(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (v[0] + v[1]),
        3 => h / 3.0 * (v[0] + 4.0 * v[1] + v[2]),
        _ => {
            let intervals = n - 1;
            let even_end = if intervals % 2 == 0 { n - 1 } else { n - 4 };
            let mut s = 0.0;
            let mut i = 0;
            while i + 2 <= even_end {
                s += h / 3.0 * (v[i] + 4.0 * v[i + 1] + v[i + 2]);
                i += 2;
            }
            if even_end != n - 1 {
                let j = n - 4;
                s += 3.0 * h / 8.0 * (v[j] + 3.0 * v[j + 1] + 3.0 * v[j + 2] + v[j + 3]);
            }
            s
        }
    }
}

/// Running integral with local cubic interpolation on each interval.
pub fn cumulative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
        }
        return out;
    }
    for i in 1..n {
        // ∫ over [x_{i-1}, x_i] using four neighbouring samples
        let s = if i == 1 {
            h / 24.0 * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3])
        } else if i == n - 1 {
            h / 24.0 * (9.0 * v[n - 1] + 19.0 * v[n - 2] - 5.0 * v[n - 3] + v[n - 4])
        } else {
            h / 24.0 * (-v[i - 2] + 13.0 * v[i - 1] + 13.0 * v[i] - v[i + 1])
        };
        out[i] = out[i - 1] + s;
    }
    out
}

/// Finite-difference weights for derivatives `0..=m` at `x0` from nodes
/// `xs` (Fornberg's recursion). `w[k][j]` multiplies `f(xs[j])` in the
/// `k`-th derivative.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Sixth-order (in the interior) finite-difference derivative.
pub fn fd_derivative(v: &[f64], h: f64, order: u32) -> Vec<f64> {
    let n = v.len();
    let m = order as usize;
    if m == 0 {
        return v.to_vec();
    }
    let width = (if m <= 2 { 7 } else { 9 }).min(n);
    let half = width / 2;
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; width];
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let start = i.saturating_sub(half).min(n - width);
        let off = i - start;
        let w = cache[off].get_or_insert_with(|| {
            let xs: Vec<f64> = (0..width).map(|j| j as f64).collect();
            fornberg_weights(off as f64, &xs, m).swap_remove(m)
        });
        let s: f64 = w.iter().zip(&v[start..start + width]).map(|(a, b)| a * b).sum();
        *o = s / h.powi(order as i32);
    }
    out
}

/// Fourier differentiation and constant-coefficient inversion on a
/// periodic grid with cached FFT plans.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers; the Nyquist entry is kept separately.
    k: Vec<f64>,
}

impl Spectral {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        Spectral { n, forward, inverse, k }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    fn is_nyquist(&self, j: usize) -> bool {
        self.n % 2 == 0 && j == self.n / 2
    }

    pub fn fft(&self, v: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn fft_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    pub fn ifft_complex(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    pub fn ifft(&self, buf: Vec<Complex64>) -> Vec<f64> {
        self.ifft_complex(buf).into_iter().map(|c| c.re).collect()
    }

    /// Applies the Fourier multiplier `symbol(k)`; odd symbols vanish at
    /// the Nyquist mode.
    pub fn apply<F: Fn(f64) -> Complex64>(&self, v: &[f64], symbol: F, odd: bool) -> Vec<f64> {
        let mut f = self.fft(v);
        for (j, c) in f.iter_mut().enumerate() {
            if odd && self.is_nyquist(j) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= symbol(self.k[j]);
            }
        }
        self.ifft(f)
    }

    pub fn derivative(&self, v: &[f64], order: u32) -> Vec<f64> {
        if order == 0 {
            return v.to_vec();
        }
        let i = Complex64::new(0.0, 1.0);
        self.apply(v, |k| (i * k).powu(order), order % 2 == 1)
    }

    /// Solves `(a - b ∂²) u = f`.
    pub fn helmholtz_solve(&self, f: &[f64], a: f64, b: f64) -> Vec<f64> {
        self.apply(f, |k| Complex64::new(1.0 / (a + b * k * k), 0.0), false)
    }

    /// Largest modulus among the top third of Fourier modes relative to the
    /// largest overall; a cheap resolution indicator.
    pub fn tail_ratio(&self, v: &[f64]) -> f64 {
        let f = self.fft(v);
        let max = f.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let tail = (0..self.n)
            .filter(|&j| self.k[j].abs() > self.k[self.n / 2].abs() * 2.0 / 3.0)
            .map(|j| f[j].norm())
            .fold(0.0, f64::max);
        tail / max
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Periodic trigonometric interpolant evaluated at an arbitrary point.
pub fn trig_interpolate(coeffs: &[Complex64], length: f64, a: f64, x: f64, order: u32) -> f64 {
    let n = coeffs.len();
    let mut s = Complex64::new(0.0, 0.0);
    for (j, c) in coeffs.iter().enumerate() {
        let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        if n % 2 == 0 && j == n / 2 {
            // split the Nyquist mode symmetrically so the interpolant is real
            let k = 2.0 * PI * m / length;
            let val = c * (Complex64::new(0.0, k * (x - a))).exp();
            let d = (Complex64::new(0.0, k)).powu(order);
            s += 0.5 * val * d + 0.5 * c * (Complex64::new(0.0, -k * (x - a))).exp() * (Complex64::new(0.0, -k)).powu(order);
            continue;
        }
        let k = 2.0 * PI * m / length;
        s += c * (Complex64::new(0.0, k * (x - a))).exp() * (Complex64::new(0.0, k)).powu(order);
    }
    s.re / n as f64
}
