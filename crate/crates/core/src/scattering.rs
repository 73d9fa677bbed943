//! Decaying and scattering potentials: Jost solutions, the asymptotic
//! coefficients `α_j`, connection coefficients `a(k), b(k)` and the
//! reflection identity linking them to the Weyl functions.
//!
//! With `V = (q - q̃)/y - λ₀`, `λ = k² + λ₀` and the Liouville variable
//! `ξ = 𝓘(x) = ∫₀ˣ √y`, a solution `y^{-1/4} e^{iσξ} f` of
//! `-φ'' + qφ = λyφ` has an envelope obeying `f_ξξ + 2iσ f_ξ = V f`.
//! Jost solutions are envelopes started at `f = 1, f_ξ = 0` on the far
//! side of the truncated line.
//!
//! Conventions: `jost(k, Plus) = φ₊(k) ~ y^{-1/4}e^{ik𝓘}` at `+∞` and
//! `jost(k, Minus) = φ₋(k) ~ y^{-1/4}e^{-ik𝓘}` at `-∞`. The connection
//! `ψ₊(k) = a(k)ψ₋(k) + b(k)ψ₋(-k)` uses `ψ₊ = φ₊` and `ψ₋(k) = φ₋(-k)`,
//! so that `a ≡ 1, b ≡ 0` for `V ≡ 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::Side;
use crate::grid::Grid;
use crate::ode::Dopri5;
use crate::pair::PotentialPair;
use crate::weyl::{extrapolate_to_zero, riccati_m, RiccatiOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A pair with `V ∈ L¹`, truncated to `[x_min, x_max]`.
#[derive(Clone, Debug)]
pub struct DecayingPair {
    pub pair: PotentialPair,
    pub lambda0: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub ode: Dopri5,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailReport {
    pub left_mass: f64,
    pub right_mass: f64,
}

/// Envelope data at one node: `f`, `g = f_ξ` and `𝓘`.
#[derive(Clone, Copy, Debug)]
struct EnvelopePoint {
    f: Complex64,
    g: Complex64,
    phase: f64,
}

/// A solution `y^{-1/4} e^{iσ𝓘} f` sampled at nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JostSolution {
    pub sigma: Complex64,
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub dpsi: Vec<Complex64>,
    /// `f = y^{1/4} e^{-iσ𝓘} ψ`.
    pub envelope: Vec<Complex64>,
    envelope_d: Vec<Complex64>,
    phase: Vec<f64>,
}

impl JostSolution {
    /// `W(self, other) = self·other' - self'·other` at node `i`, computed
    /// from envelopes so that the `y` factors cancel exactly.
    pub fn wronskian(&self, other: &JostSolution, i: usize) -> Complex64 {
        let (s1, s2) = (self.sigma, other.sigma);
        let (f1, g1, f2, g2) = (self.envelope[i], self.envelope_d[i], other.envelope[i], other.envelope_d[i]);
        (I * (s1 + s2) * self.phase[i]).exp() * (I * (s2 - s1) * f1 * f2 + f1 * g2 - f2 * g1)
    }

    /// `ψ'/ψ`.
    pub fn log_derivative(&self) -> Vec<Complex64> {
        self.psi.iter().zip(&self.dpsi).map(|(p, d)| d / p).collect()
    }
}

impl DecayingPair {
    pub fn new(pair: PotentialPair, lambda0: f64, x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_max > 0.0 && x_min < 0.0) {
            return Err(Error::InvalidArgument("truncation interval must contain 0".into()));
        }
        Ok(DecayingPair { pair, lambda0, x_min, x_max, ode: Dopri5::with_tol(1e-12, 1e-14) })
    }

    /// `V(x) = (q - q̃)/y - λ₀`.
    pub fn v(&self, x: f64) -> f64 {
        self.pair.v(x, self.lambda0)
    }

    fn sqrt_y(&self, x: f64) -> f64 {
        self.pair.y.eval(x).sqrt()
    }

    /// `𝓘(x) = ∫₀ˣ √y`.
    pub fn liouville(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let out = self.ode.integrate(|s, _, d| d[0] = self.sqrt_y(s), 0.0, &[0.0], &[x])?;
        Ok(out[0][0])
    }

    /// Mass of `|V|` beyond each end, from an exponential fit over the last
    /// tenth of the interval; infinite when the fit does not decay.
    pub fn tail_report(&self) -> TailReport {
        let d = 0.1 * (self.x_max - self.x_min);
        let fit = |inner: f64, outer: f64| -> f64 {
            let (v1, v2) = (self.v(inner).abs(), self.v(outer).abs());
            if v2 < 1e-300 {
                return 0.0;
            }
            let rate = (v1 / v2).ln() / d;
            if rate > 0.0 {
                v2 / rate
            } else {
                f64::INFINITY
            }
        };
        TailReport { left_mass: fit(self.x_min + d, self.x_min), right_mass: fit(self.x_max - d, self.x_max) }
    }

    /// Fails with [`Error::TailTooFat`] when the truncated mass exceeds `tol`.
    pub fn check_tails(&self, tol: f64) -> Result<TailReport> {
        let r = self.tail_report();
        let mass = r.left_mass + r.right_mass;
        if !(mass <= tol) {
            return Err(Error::TailTooFat { mass, tol });
        }
        Ok(r)
    }

    fn envelope(&self, sigma: Complex64, start: f64, xs: &[f64]) -> Result<Vec<EnvelopePoint>> {
        let i0 = self.liouville(start)?;
        let rhs = |x: f64, u: &[f64], du: &mut [f64]| {
            let s = self.sqrt_y(x);
            let f = Complex64::new(u[0], u[1]);
            let g = Complex64::new(u[2], u[3]);
            let df = s * g;
            let dg = s * (self.v(x) * f - 2.0 * I * sigma * g);
            du[0] = df.re;
            du[1] = df.im;
            du[2] = dg.re;
            du[3] = dg.im;
            du[4] = s;
        };
        let backward = start >= xs[xs.len() - 1];
        let order: Vec<usize> = if backward { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
        let targets: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        let raw = self.ode.integrate(rhs, start, &[1.0, 0.0, 0.0, 0.0, i0], &targets)?;
        let mut out = vec![EnvelopePoint { f: Complex64::new(0.0, 0.0), g: Complex64::new(0.0, 0.0), phase: 0.0 }; xs.len()];
        for (j, &i) in order.iter().enumerate() {
            let u = &raw[j];
            out[i] = EnvelopePoint { f: Complex64::new(u[0], u[1]), g: Complex64::new(u[2], u[3]), phase: u[4] };
        }
        Ok(out)
    }

    /// Solution with envelope started at `start` for exponent `σ`.
    fn solution(&self, sigma: Complex64, start: f64, xs: &[f64]) -> Result<JostSolution> {
        if xs.is_empty() || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("nodes must be strictly increasing".into()));
        }
        if xs[0] < self.x_min || xs[xs.len() - 1] > self.x_max {
            return Err(Error::InvalidArgument("nodes lie outside the truncation interval".into()));
        }
        let env = self.envelope(sigma, start, xs)?;
        let mut psi = Vec::with_capacity(xs.len());
        let mut dpsi = Vec::with_capacity(xs.len());
        for (e, &x) in env.iter().zip(xs) {
            let yj = self.pair.y.jet(x);
            let (y, yx) = (yj.value(), yj.deriv(1));
            let s = y.sqrt();
            let pre = y.powf(-0.25) * (I * sigma * e.phase).exp();
            psi.push(pre * e.f);
            dpsi.push(pre * ((-yx / (4.0 * y) + I * sigma * s) * e.f + s * e.g));
        }
        Ok(JostSolution {
            sigma,
            x: xs.to_vec(),
            psi,
            dpsi,
            envelope: env.iter().map(|e| e.f).collect(),
            envelope_d: env.iter().map(|e| e.g).collect(),
            phase: env.iter().map(|e| e.phase).collect(),
        })
    }
}

/// The Jost solution `φ₊(k)` or `φ₋(k)`, `Im k ≥ 0`, at increasing nodes.
pub fn jost(dp: &DecayingPair, k: Complex64, side: Side, xs: &[f64]) -> Result<JostSolution> {
    if k.im < 0.0 {
        return Err(Error::InvalidArgument("Jost solutions need Im k >= 0".into()));
    }
    match side {
        Side::Plus => dp.solution(k, dp.x_max, xs),
        Side::Minus => dp.solution(-k, dp.x_min, xs),
    }
}

/// Running integral of `h` from the left end on a line grid.
fn from_left(grid: &Grid, h: &[f64]) -> Vec<f64> {
    grid.cumulative(h)
}

/// Running integral of `h` from each node to the right end.
fn from_right(grid: &Grid, h: &[f64]) -> Vec<f64> {
    let c = grid.cumulative(h);
    let total = c[c.len() - 1];
    c.iter().map(|v| total - v).collect()
}

/// `α_1..α_N` on a line grid. For `Plus` they satisfy
/// `α₁ = -∫_ξ^∞ V`, `α_{j+1} = -α_j' - ∫_ξ^∞ Vα_j` (primes in `ξ`), and
/// `y^{1/4}e^{-ik𝓘}φ₊ ~ 1 + Σ α_j (2ik)^{-j}`. For `Minus` the integrals
/// run from `-∞`, `α₁ = ∫_{-∞}^ξ V`, `α_{j+1} = -α_j' + ∫_{-∞}^ξ Vα_j`, and
/// `y^{1/4}e^{ik𝓘}φ₋ ~ 1 + Σ (-1)^j α_j (2ik)^{-j}`.
pub fn alpha_coefficients(dp: &DecayingPair, grid: &Grid, n: usize, side: Side, tail_tol: f64) -> Result<Vec<Vec<f64>>> {
    if grid.periodic {
        return Err(Error::InvalidArgument("alpha coefficients need a line grid".into()));
    }
    dp.check_tails(tail_tol)?;
    let s: Vec<f64> = grid.sample(|x| dp.sqrt_y(x));
    let v: Vec<f64> = grid.sample(|x| dp.v(x));
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    let weighted = |a: &[f64]| -> Vec<f64> { (0..grid.n).map(|i| v[i] * a[i] * s[i]).collect() };
    let ones = vec![1.0; grid.n];
    for j in 0..n {
        let base = if j == 0 { &ones } else { &out[j - 1] };
        let integrand = weighted(base);
        let next: Vec<f64> = match side {
            Side::Plus => {
                let tail = from_right(grid, &integrand);
                if j == 0 {
                    tail.iter().map(|t| -t).collect()
                } else {
                    let d = grid.derivative(base, 1);
                    (0..grid.n).map(|i| -d[i] / s[i] - tail[i]).collect()
                }
            }
            Side::Minus => {
                let head = from_left(grid, &integrand);
                if j == 0 {
                    head
                } else {
                    let d = grid.derivative(base, 1);
                    (0..grid.n).map(|i| -d[i] / s[i] + head[i]).collect()
                }
            }
        };
        out.push(next);
    }
    Ok(out)
}

/// `|envelope(x, k) - [1 + Σ c_j α_j(x)(2ik)^{-j}]|` for each `k`, with
/// `c_j = 1` on the plus side and `(-1)^j` on the minus side.
pub fn alpha_remainders(dp: &DecayingPair, alphas: &[Vec<f64>], grid: &Grid, x_index: usize, side: Side, ks: &[f64]) -> Result<Vec<f64>> {
    let x = grid.x(x_index);
    ks.par_iter()
        .map(|&k| {
            let sol = jost(dp, Complex64::new(k, 0.0), side, &[x])?;
            let mut series = Complex64::new(1.0, 0.0);
            let z = 2.0 * I * k;
            for (j, a) in alphas.iter().enumerate() {
                let sign = if side == Side::Minus && j % 2 == 0 { -1.0 } else { 1.0 };
                series += sign * a[x_index] / z.powu(j as u32 + 1);
            }
            Ok((sol.envelope[0] - series).norm())
        })
        .collect()
}

/// Least-squares slope of `log r` against `log k`.
pub fn log_log_slope(ks: &[f64], r: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ks.iter().zip(r).filter(|(_, v)| **v > 0.0).map(|(k, v)| (k.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatteringData {
    pub k: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// `a(-k), b(-k)`.
    pub a_neg: Vec<Complex64>,
    pub b_neg: Vec<Complex64>,
    /// `r⁺ = -b(-k)/a(k)`.
    pub r_plus: Vec<Complex64>,
    /// `r⁻ = b(k)/a(k)`.
    pub r_minus: Vec<Complex64>,
    /// Largest variation of the Wronskians across the interior nodes.
    pub wronskian_drift: f64,
}

impl ScatteringData {
    /// `max_k ||a|² - 1 - |b|²|`.
    pub fn unitarity_residual(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| (a.norm_sqr() - 1.0 - b.norm_sqr()).abs()).fold(0.0, f64::max)
    }

    /// `max_k (|a(k) - conj a(-k)| + |b(k) - conj b(-k)|)`.
    pub fn conjugation_residual(&self) -> f64 {
        (0..self.k.len())
            .map(|i| (self.a[i] - self.a_neg[i].conj()).norm() + (self.b[i] - self.b_neg[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,a_re,a_im,b_re,b_im,abs_r_plus,abs_r_minus\n");
        for i in 0..self.k.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.k[i],
                self.a[i].re,
                self.a[i].im,
                self.b[i].re,
                self.b[i].im,
                self.r_plus[i].norm(),
                self.r_minus[i].norm()
            ));
        }
        s
    }
}

/// Nodes in the middle half of the truncation interval.
fn interior_nodes(dp: &DecayingPair, n: usize) -> Vec<f64> {
    let (a, b) = (0.5 * dp.x_min, 0.5 * dp.x_max);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `(a, b, drift)` at one real `k ≠ 0`.
fn connection(dp: &DecayingPair, k: f64, xs: &[f64]) -> Result<(Complex64, Complex64, f64)> {
    let kc = Complex64::new(k, 0.0);
    let psi_p = dp.solution(kc, dp.x_max, xs)?;
    let psi_m = dp.solution(kc, dp.x_min, xs)?;
    let psi_m_neg = dp.solution(-kc, dp.x_min, xs)?;
    let w0 = -2.0 * I * k;
    let wa: Vec<Complex64> = (0..xs.len()).map(|i| psi_p.wronskian(&psi_m_neg, i)).collect();
    let wb: Vec<Complex64> = (0..xs.len()).map(|i| psi_m.wronskian(&psi_p, i)).collect();
    let w00: Vec<Complex64> = (0..xs.len()).map(|i| psi_m.wronskian(&psi_m_neg, i)).collect();
    let mid = xs.len() / 2;
    let spread = |w: &[Complex64]| -> f64 {
        let scale = w[mid].norm().max(1.0);
        w.iter().map(|v| (v - w[mid]).norm()).fold(0.0, f64::max) / scale
    };
    let drift = spread(&wa).max(spread(&wb)).max((w00[mid] - w0).norm() / w0.norm());
    Ok((wa[mid] / w0, wb[mid] / w0, drift))
}

/// Connection coefficients on a grid of real `k ≠ 0`.
pub fn scattering_data(dp: &DecayingPair, ks: &[f64], drift_tol: f64) -> Result<ScatteringData> {
    if ks.iter().any(|k| *k == 0.0) {
        return Err(Error::InvalidArgument("k = 0 is excluded".into()));
    }
    let xs = interior_nodes(dp, 9);
    let rows: Vec<_> = ks
        .par_iter()
        .map(|&k| Ok((connection(dp, k, &xs)?, connection(dp, -k, &xs)?)))
        .collect::<Result<Vec<_>>>()?;
    let drift = rows.iter().map(|(p, n)| p.2.max(n.2)).fold(0.0, f64::max);
    if !(drift <= drift_tol) {
        return Err(Error::WronskianDrift { drift, tol: drift_tol });
    }
    let a: Vec<Complex64> = rows.iter().map(|r| r.0 .0).collect();
    let b: Vec<Complex64> = rows.iter().map(|r| r.0 .1).collect();
    let a_neg: Vec<Complex64> = rows.iter().map(|r| r.1 .0).collect();
    let b_neg: Vec<Complex64> = rows.iter().map(|r| r.1 .1).collect();
    let r_plus = (0..ks.len()).map(|i| -b_neg[i] / a[i]).collect();
    let r_minus = (0..ks.len()).map(|i| b[i] / a[i]).collect();
    Ok(ScatteringData { k: ks.to_vec(), a, b, a_neg, b_neg, r_plus, r_minus, wronskian_drift: drift })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Refl1Report {
    /// `max |m₊ - conj m₋ + 2ikb/(ψ₊ψ₋(k))|`.
    pub residual: f64,
    /// The same with `+2ikb` on the right-hand side.
    pub residual_opposite_sign: f64,
    /// `max |m₊ - conj m₋|`, the size of the left-hand side.
    pub lhs_max: f64,
}

/// Pointwise check of
/// `m₊(x, k² + λ₀ + i0) - conj m₋(x, k² + λ₀ + i0) = -2ik b(k)/(ψ₊(x,k)ψ₋(x,k))`
/// with `m±` from Riccati integration and the `ε → 0` limit taken on
/// `eps_ladder`.
pub fn refl1_check(dp: &DecayingPair, ks: &[f64], xs: &[f64], eps_ladder: &[f64]) -> Result<Refl1Report> {
    let data = scattering_data(dp, ks, 1e-6)?;
    let mut nodes = vec![dp.x_min];
    nodes.extend_from_slice(xs);
    nodes.push(dp.x_max);
    let opts = RiccatiOptions { ode: Dopri5::with_tol(1e-12, 1e-14), ..RiccatiOptions::periodic_tails(0.0) };
    let rows: Vec<(f64, f64, f64)> = ks
        .par_iter()
        .enumerate()
        .map(|(ik, &k)| {
            let kc = Complex64::new(k, 0.0);
            let psi_p = dp.solution(kc, dp.x_max, xs)?;
            let psi_m = dp.solution(kc, dp.x_min, xs)?;
            let lam = k * k + dp.lambda0;
            let mut lhs_ladder: Vec<Vec<Complex64>> = Vec::new();
            for &e in eps_ladder {
                let l = Complex64::new(lam, e);
                let mp = riccati_m(&dp.pair, &nodes, l, Side::Plus, &opts)?;
                let mm = riccati_m(&dp.pair, &nodes, l, Side::Minus, &opts)?;
                lhs_ladder.push((1..=xs.len()).map(|i| mp[i] - mm[i].conj()).collect());
            }
            let mut worst = (0.0f64, 0.0f64, 0.0f64);
            for i in 0..xs.len() {
                let samples: Vec<Complex64> = lhs_ladder.iter().map(|v| v[i]).collect();
                let lhs = extrapolate_to_zero(eps_ladder, &samples);
                let rhs = 2.0 * I * k * data.b[ik] / (psi_p.psi[i] * psi_m.psi[i]);
                worst.0 = worst.0.max((lhs + rhs).norm());
                worst.1 = worst.1.max((lhs - rhs).norm());
                worst.2 = worst.2.max(lhs.norm());
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(Refl1Report {
        residual: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        residual_opposite_sign: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        lhs_max: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::Expr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sech_well() -> DecayingPair {
        let q = Expr::sum(vec![Expr::constant(1.0), Expr::Sech2 { amp: -2.0, kappa: 1.0, center: 0.0 }]);
        DecayingPair::new(PotentialPair::new(q, Expr::constant(1.0), 0.5), 1.0, -20.0, 20.0).unwrap()
    }

    fn smooth_box() -> DecayingPair {
        let q = Expr::sum(vec![Expr::constant(1.0), Expr::SmoothBox { amp: 0.8, half_width: 2.0, edge: 0.5, center: 0.3 }]);
        DecayingPair::new(PotentialPair::new(q, Expr::constant(1.0), 0.5), 1.0, -25.0, 25.0).unwrap()
    }

    #[test]
    fn free_jost_is_the_closed_form() {
        let y = Expr::sum(vec![Expr::constant(1.0), Expr::GaussBump { amp: 0.4, width: 1.5, center: 0.0 }]);
        let dp = DecayingPair::new(PotentialPair::stationary(y.clone(), 1.0, 0.5), 1.0, -15.0, 15.0).unwrap();
        let xs = [-2.0, 0.0, 1.0, 3.0];
        let k = 1.7;
        let p = jost(&dp, c(k, 0.0), Side::Plus, &xs).unwrap();
        let m = jost(&dp, c(k, 0.0), Side::Minus, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let phase = dp.liouville(x).unwrap();
            let amp = y.eval(x).powf(-0.25);
            assert!((p.psi[i] - amp * (I * k * phase).exp()).norm() < 1e-9);
            assert!((m.psi[i] - amp * (-I * k * phase).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn reflectionless_jost_matches_closed_form() {
        // f₊ = (k + i tanh x)/(k + i) times e^{ikx}
        let dp = sech_well();
        let xs: Vec<f64> = (0..9).map(|i| -4.0 + i as f64).collect();
        let k = 1.0;
        let p = jost(&dp, c(k, 0.0), Side::Plus, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let exact = (c(k, 0.0) + I * x.tanh()) / (c(k, 0.0) + I) * (I * k * x).exp();
            assert!((p.psi[i] - exact).norm() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn jost_decays_for_complex_k() {
        let dp = sech_well();
        let k = c(0.5, 0.7);
        let p = jost(&dp, k, Side::Plus, &[10.0, 15.0]).unwrap();
        let rate = (p.psi[0].norm() / p.psi[1].norm()).ln() / 5.0;
        assert!((rate - 0.7).abs() < 1e-6);
    }

    #[test]
    fn free_scattering_is_trivial() {
        let dp = DecayingPair::new(PotentialPair::new(Expr::constant(2.0), Expr::constant(1.0), 0.5), 2.0, -10.0, 10.0).unwrap();
        let s = scattering_data(&dp, &[0.3, 1.0, 2.5], 1e-8).unwrap();
        for i in 0..3 {
            assert!((s.a[i] - 1.0).norm() < 1e-10);
            assert!(s.b[i].norm() < 1e-10);
        }
    }

    #[test]
    fn reflectionless_well() {
        let dp = sech_well();
        let ks: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
        let s = scattering_data(&dp, &ks, 1e-8).unwrap();
        for i in 0..ks.len() {
            assert!(s.b[i].norm() < 1e-6);
            assert!((s.a[i].norm() - 1.0).abs() < 1e-8);
            // transmission 1/a = (k + i)/(k - i)
            let t = (c(ks[i], 0.0) + I) / (c(ks[i], 0.0) - I);
            assert!((1.0 / s.a[i] - t).norm() < 1e-8);
        }
    }

    #[test]
    fn unitarity_and_conjugation_for_a_box() {
        let dp = smooth_box();
        let ks: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        let s = scattering_data(&dp, &ks, 1e-8).unwrap();
        assert!(s.unitarity_residual() < 1e-8, "{}", s.unitarity_residual());
        assert!(s.conjugation_residual() < 1e-8);
        assert!(s.b.iter().any(|b| b.norm() > 1e-2));
        for i in 0..ks.len() {
            assert!(s.r_plus[i].norm() <= 1.0 && s.r_minus[i].norm() <= 1.0);
            assert!((s.r_plus[i].norm() - s.r_minus[i].norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn jost_log_derivative_is_the_weyl_function() {
        let dp = smooth_box();
        let k = 1.3;
        let xs = [-1.0, 0.0, 2.0];
        let p = jost(&dp, c(k, 0.0), Side::Plus, &xs).unwrap();
        let mut nodes = xs.to_vec();
        nodes.push(dp.x_max);
        let m = riccati_m(&dp.pair, &nodes, c(k * k + 1.0, 0.0), Side::Plus, &RiccatiOptions::default()).unwrap();
        for (i, d) in p.log_derivative().iter().enumerate() {
            assert!((d - m[i]).norm() < 1e-6);
        }
    }

    #[test]
    fn reflection_identity_signs() {
        let dp = smooth_box();
        let r = refl1_check(&dp, &[1.0], &[0.0], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(r.residual < 1e-4, "{r:?}");
        assert!(r.lhs_max > 1e-2);
        assert!(r.residual_opposite_sign > 1e-2);
        let well = refl1_check(&sech_well(), &[0.7, 1.5], &[-1.0, 0.5], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(well.lhs_max < 1e-4 && well.residual < 1e-4, "{well:?}");
    }

    #[test]
    fn alpha_closed_form_and_order() {
        let dp = sech_well();
        let grid = Grid::line(-20.0, 20.0, 4001);
        let a = alpha_coefficients(&dp, &grid, 3, Side::Plus, 1e-10).unwrap();
        for i in (0..grid.n).step_by(250) {
            let x = grid.x(i);
            assert!((a[0][i] - 2.0 * (1.0 - x.tanh())).abs() < 1e-8);
        }
        let ks: Vec<f64> = (0..10).map(|i| 5.0 * 10f64.powf(i as f64 / 9.0)).collect();
        let x0 = 2000;
        for side in [Side::Plus, Side::Minus] {
            let a = alpha_coefficients(&dp, &grid, 3, side, 1e-10).unwrap();
            let r = alpha_remainders(&dp, &a, &grid, x0, side, &ks).unwrap();
            let slope = -log_log_slope(&ks, &r);
            assert!(slope >= 2.5, "{side:?}: slope {slope}, {r:?}");
        }
    }

    #[test]
    fn zero_potential_has_zero_alphas() {
        let dp = DecayingPair::new(PotentialPair::new(Expr::constant(0.0), Expr::constant(1.0), 0.5), 0.0, -5.0, 5.0).unwrap();
        let grid = Grid::line(-5.0, 5.0, 101);
        for a in alpha_coefficients(&dp, &grid, 3, Side::Plus, 1e-10).unwrap() {
            assert!(a.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn fat_tails_are_rejected() {
        let q = Expr::sum(vec![Expr::constant(1.0), Expr::Sech2 { amp: -2.0, kappa: 0.2, center: 0.0 }]);
        let dp = DecayingPair::new(PotentialPair::new(q, Expr::constant(1.0), 0.5), 1.0, -20.0, 20.0).unwrap();
        assert!(matches!(dp.check_tails(1e-10), Err(Error::TailTooFat { .. })));
        assert!(sech_well().check_tails(1e-10).is_ok());
    }
}
