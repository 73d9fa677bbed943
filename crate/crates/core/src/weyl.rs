//! Weyl m-functions and the quantities built from them.
//!
//! `m₊` is the logarithmic derivative of the solution of
//! `-φ'' + qφ = λyφ` that is square integrable at `+∞`, and `m₋` likewise
//! at `-∞`; both satisfy `m_x + m² = q - λy`. They are computed from the
//! linear system `(φ, φ')` integrated toward the interior, which is the
//! stable direction, restarting from `(1, m)` at every output node.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::Side;
use crate::grid::{max_abs, Grid};
use crate::ode::Dopri5;
use crate::pair::{tilde_q_jet, PotentialPair};

#[derive(Clone, Copy, Debug)]
pub struct RiccatiOptions {
    pub ode: Dopri5,
    /// Extra distance beyond the outermost node at which the seed is placed.
    pub margin: f64,
    /// Reject seeds where the tail is not flat.
    pub check_tail: bool,
    /// Bound on `|V_x| / |V - λ|^{3/2}` at the seed point, `V = (q - q̃)/y`.
    pub tail_tol: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions { ode: Dopri5::default(), margin: 0.0, check_tail: true, tail_tol: 1e-6 }
    }
}

impl RiccatiOptions {
    pub fn periodic_tails(margin: f64) -> Self {
        RiccatiOptions { margin, check_tail: false, ..Default::default() }
    }
}

/// `√z` on the branch used for the decaying solution; a real negative
/// argument is read as the `λ + i0` limit.
fn decay_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(0.0, -(-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

/// Frozen-tail seed: exact when `V = (q - q̃)/y` is constant beyond `x`.
pub fn frozen_tail_seed(pair: &PotentialPair, x: f64, lambda: Complex64, side: Side) -> Complex64 {
    let p = pair.point(x);
    let s = decay_sqrt(p.q - p.tilde_q() - lambda * p.y);
    let a0 = -p.y_x / (4.0 * p.y);
    match side {
        Side::Plus => a0 - s,
        Side::Minus => a0 + s,
    }
}

fn tail_flatness(pair: &PotentialPair, x: f64, lambda: Complex64) -> f64 {
    let yj = pair.y.jet(x);
    let vj = (pair.q.jet(x) - tilde_q_jet(&yj)) / yj;
    let denom = (vj.value() - lambda).norm().powf(1.5);
    vj.deriv(1).abs() / denom
}

/// `m₊` or `m₋` at the increasing nodes `xs`.
pub fn riccati_m(pair: &PotentialPair, xs: &[f64], lambda: Complex64, side: Side, opts: &RiccatiOptions) -> Result<Vec<Complex64>> {
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let (start, order): (f64, Vec<usize>) = match side {
        Side::Plus => (xs[xs.len() - 1] + opts.margin, (0..xs.len()).rev().collect()),
        Side::Minus => (xs[0] - opts.margin, (0..xs.len()).collect()),
    };
    if opts.check_tail {
        let f = tail_flatness(pair, start, lambda);
        if !(f <= opts.tail_tol) {
            return Err(Error::SeedInvalid { x: start, detail: format!("flatness {f:e} > {:e}", opts.tail_tol) });
        }
    }
    let seed = frozen_tail_seed(pair, start, lambda, side);
    let targets: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let rhs = |x: f64, u: &[f64], du: &mut [f64]| {
        let p = pair.y.eval(x);
        let w = Complex64::new(pair.q.eval(x), 0.0) - lambda * p;
        let phi = Complex64::new(u[0], u[1]);
        let dphi = w * phi;
        du[0] = u[2];
        du[1] = u[3];
        du[2] = dphi.re;
        du[3] = dphi.im;
    };
    let mut out = vec![Complex64::new(0.0, 0.0); xs.len()];
    let mut failure = None;
    opts.ode.integrate_with(rhs, start, &[1.0, 0.0, seed.re, seed.im], &targets, |j, u| {
        let phi = Complex64::new(u[0], u[1]);
        let m = Complex64::new(u[2], u[3]) / phi;
        if !m.is_finite() && failure.is_none() {
            failure = Some(targets[j]);
        }
        out[order[j]] = m;
        Some(vec![1.0, 0.0, m.re, m.im])
    })?;
    if let Some(x) = failure {
        return Err(Error::BlowUp { x });
    }
    Ok(out)
}

/// Max over the nodes of `|m_x + m² - (q - λy)| / (|q - λy| + |m|²)`, with
/// `m_x` from grid differentiation.
pub fn riccati_residual(grid: &Grid, m: &[Complex64], q: &[f64], y: &[f64], lambda: Complex64) -> f64 {
    let re: Vec<f64> = m.iter().map(|c| c.re).collect();
    let im: Vec<f64> = m.iter().map(|c| c.im).collect();
    let (dre, dim) = (grid.derivative(&re, 1), grid.derivative(&im, 1));
    (0..grid.n)
        .map(|i| {
            let w = q[i] - lambda * y[i];
            let r = Complex64::new(dre[i], dim[i]) + m[i] * m[i] - w;
            r.norm() / (w.norm() + m[i].norm_sqr())
        })
        .fold(0.0, f64::max)
}

/// `m±` over grid nodes and a set of spectral parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeylField {
    pub x: Vec<f64>,
    pub lambdas: Vec<Complex64>,
    /// Indexed `[λ][x]`.
    pub m_plus: Vec<Vec<Complex64>>,
    pub m_minus: Vec<Vec<Complex64>>,
}

/// Quantities derived from `m±`, indexed `[λ][x]`.
#[derive(Clone, Debug)]
pub struct WeylDerived {
    /// `ℳ = m₋ - m₊`
    pub m_diff: Vec<Vec<Complex64>>,
    /// `𝒩 = m₋ + m₊`
    pub n_sum: Vec<Vec<Complex64>>,
    /// `𝒢 = y/ℳ`
    pub g: Vec<Vec<Complex64>>,
    /// `R = (conj(m₊) - m₋)/(m₊ - m₋)`
    pub r: Vec<Vec<Complex64>>,
}

impl WeylField {
    pub fn compute(pair: &PotentialPair, xs: &[f64], lambdas: &[Complex64], opts: &RiccatiOptions) -> Result<Self> {
        let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = lambdas
            .par_iter()
            .map(|&l| Ok((riccati_m(pair, xs, l, Side::Plus, opts)?, riccati_m(pair, xs, l, Side::Minus, opts)?)))
            .collect::<Result<_>>()?;
        let (m_plus, m_minus) = rows.into_iter().unzip();
        Ok(WeylField { x: xs.to_vec(), lambdas: lambdas.to_vec(), m_plus, m_minus })
    }

    pub fn derived(&self, y: &[f64]) -> WeylDerived {
        let map = |f: &dyn Fn(Complex64, Complex64, f64) -> Complex64| -> Vec<Vec<Complex64>> {
            self.m_plus
                .iter()
                .zip(&self.m_minus)
                .map(|(p, m)| (0..self.x.len()).map(|i| f(p[i], m[i], y[i])).collect())
                .collect()
        };
        WeylDerived {
            m_diff: map(&|p, m, _| m - p),
            n_sum: map(&|p, m, _| m + p),
            g: map(&|p, m, y| y / (m - p)),
            r: map(&|p, m, _| (p.conj() - m) / (p - m)),
        }
    }

    /// Samples with `Im λ ≠ 0` where `sgn(Im m₊/Im λ) ≠ +1` or
    /// `sgn(Im m₋/Im λ) ≠ -1`, as `(λ index, x index)`.
    pub fn herglotz_violations(&self) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for (l, lam) in self.lambdas.iter().enumerate() {
            if lam.im == 0.0 {
                continue;
            }
            for i in 0..self.x.len() {
                if self.m_plus[l][i].im * lam.im <= 0.0 || self.m_minus[l][i].im * lam.im >= 0.0 {
                    bad.push((l, i));
                }
            }
        }
        bad
    }

    /// CSV with header `x,lambda_re,lambda_im,mp_re,mp_im,mm_re,mm_im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,lambda_re,lambda_im,mp_re,mp_im,mm_re,mm_im\n");
        for (l, lam) in self.lambdas.iter().enumerate() {
            for (i, x) in self.x.iter().enumerate() {
                let (p, m) = (self.m_plus[l][i], self.m_minus[l][i]);
                s.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    x, lam.re, lam.im, p.re, p.im, m.re, m.im
                ));
            }
        }
        s
    }
}

/// `𝒢 = y/(m₋ - m₊)` with the indices `(λ, x)` where `|m₋ - m₊| < tol`.
pub fn green_diag(field: &WeylField, y: &[f64], tol: f64) -> (Vec<Vec<Complex64>>, Vec<(usize, usize)>) {
    let d = field.derived(y);
    let mut flagged = Vec::new();
    for (l, row) in d.m_diff.iter().enumerate() {
        for (i, m) in row.iter().enumerate() {
            if m.norm() < tol {
                flagged.push((l, i));
            }
        }
    }
    (d.g, flagged)
}

/// `(1/2)[-ℳ_xx/ℳ + (3/2)(ℳ_x/ℳ)² + ℳ²/2]`, which equals `q - λy` for
/// `ℳ = m₋ - m₊` at a real `λ` below the spectrum.
pub fn m0_potential(grid: &Grid, m0: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(m0)?;
    if let Some(i) = m0.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("M0[{i}] = {} is not positive", m0[i])));
    }
    let d1 = grid.derivative(m0, 1);
    let d2 = grid.derivative(m0, 2);
    Ok((0..grid.n)
        .map(|i| {
            let r = d1[i] / m0[i];
            0.5 * (-d2[i] / m0[i] + 1.5 * r * r + 0.5 * m0[i] * m0[i])
        })
        .collect())
}

/// Recovers `q` from `ℳ` computed at the real parameter `shift`
/// (`shift = 0` is `ℳ₀`); `y` defaults to 1.
pub fn recover_q_from_m0(grid: &Grid, m0: &[f64], y: Option<&[f64]>, shift: f64) -> Result<Vec<f64>> {
    let mut q = m0_potential(grid, m0)?;
    for (i, v) in q.iter_mut().enumerate() {
        *v += shift * y.map_or(1.0, |y| y[i]);
    }
    Ok(q)
}

/// `𝒩₀ = -ℳ₀,ₓ/ℳ₀`.
pub fn n0_from_m0(grid: &Grid, m0: &[f64]) -> Vec<f64> {
    let d = grid.derivative(m0, 1);
    d.iter().zip(m0).map(|(a, b)| -a / b).collect()
}

/// Residual `η ℳ_t - (Uℳ)_x` at the middle of three snapshots taken at
/// `t - dt, t, t + dt`, with a centered time difference.
pub fn m_evolution_residual(grid: &Grid, m: [&[f64]; 3], u_mid: &[f64], dt: f64, eta: f64) -> f64 {
    let um: Vec<f64> = (0..grid.n).map(|i| u_mid[i] * m[1][i]).collect();
    let flux = grid.derivative(&um, 1);
    max_abs(&(0..grid.n).map(|i| eta * (m[2][i] - m[0][i]) / (2.0 * dt) - flux[i]).collect::<Vec<_>>())
}

/// Residual of the `ℳ` evolution under KdV at the real parameter `shift`:
/// `ℳ_t - (1/4)[-ℳ_xx + (3/2)ℳ_x²/ℳ + ℳ³/2]_x - (3 shift/2) ℳ_x`.
pub fn mk_residual(grid: &Grid, m: [&[f64]; 3], dt: f64, shift: f64) -> f64 {
    let mm = m[1];
    let d1 = grid.derivative(mm, 1);
    let d2 = grid.derivative(mm, 2);
    let inner: Vec<f64> =
        (0..grid.n).map(|i| -d2[i] + 1.5 * d1[i] * d1[i] / mm[i] + 0.5 * mm[i].powi(3)).collect();
    let dinner = grid.derivative(&inner, 1);
    max_abs(
        &(0..grid.n)
            .map(|i| (m[2][i] - m[0][i]) / (2.0 * dt) - 0.25 * dinner[i] - 1.5 * shift * d1[i])
            .collect::<Vec<_>>(),
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReflectionOptions {
    pub eps_ladder: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub samples: usize,
    pub max_moment: usize,
}

impl Default for ReflectionOptions {
    fn default() -> Self {
        ReflectionOptions { eps_ladder: vec![1e-2, 1e-3, 1e-4], lambda_min: 0.0, lambda_max: 50.0, samples: 401, max_moment: 3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReflectionMeasure {
    pub x: f64,
    pub lambdas: Vec<f64>,
    /// `|R(x, λ + i0)|` after extrapolation in ε.
    pub abs_r: Vec<f64>,
    /// `μ_n = ∫ λⁿ |R| dλ` over the sampled range, `n = 0..=max_moment`.
    pub moments: Vec<f64>,
    /// Estimated contribution beyond `lambda_max` from a power-law fit of
    /// the last decade; infinite when the fit does not decay fast enough.
    pub tail_bounds: Vec<f64>,
    /// Advisory: finite cutoff data cannot prove convergence.
    pub finite: Vec<bool>,
}

/// Value at `ε = 0` of the polynomial through the samples `v(ε)`.
pub fn extrapolate_to_zero(eps: &[f64], v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (ei, vi)) in eps.iter().zip(v).enumerate() {
        let w: f64 = eps.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, ej)| ej / (ej - ei)).product();
        acc += vi * w;
    }
    acc
}

/// Moments of `|R(x, λ + i0)|` on `[lambda_min, lambda_max]`.
pub fn reflection_measure(pair: &PotentialPair, xs: &[f64], x_index: usize, ropts: &RiccatiOptions, opts: &ReflectionOptions) -> Result<ReflectionMeasure> {
    if opts.samples < 3 || !(opts.lambda_max > opts.lambda_min) || opts.eps_ladder.is_empty() {
        return Err(Error::InvalidArgument("reflection measure needs >= 3 samples, a nonempty range and an eps ladder".into()));
    }
    let n = opts.samples;
    let h = (opts.lambda_max - opts.lambda_min) / (n - 1) as f64;
    let lambdas: Vec<f64> = (0..n).map(|i| opts.lambda_min + i as f64 * h).collect();
    let left = &xs[..=x_index];
    let right = &xs[x_index..];
    let abs_r: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| {
            let mut rs = Vec::with_capacity(opts.eps_ladder.len());
            for &e in &opts.eps_ladder {
                let lam = Complex64::new(l, e);
                let mp = riccati_m(pair, right, lam, Side::Plus, ropts)?[0];
                let mm = riccati_m(pair, left, lam, Side::Minus, ropts)?[x_index];
                rs.push((mp.conj() - mm) / (mp - mm));
            }
            Ok(extrapolate_to_zero(&opts.eps_ladder, &rs).norm().min(1.0))
        })
        .collect::<Result<_>>()?;
    let mut moments = Vec::new();
    let mut tail_bounds = Vec::new();
    let mut finite = Vec::new();
    let tail_start = n - n / 10 - 1;
    for p in 0..=opts.max_moment {
        let f: Vec<f64> = lambdas.iter().zip(&abs_r).map(|(l, r)| l.powi(p as i32) * r).collect();
        moments.push(crate::grid::simpson(&f, h));
        // |R| ≈ C λ^{-s} over the last decade
        let (l1, l2) = (lambdas[tail_start], lambdas[n - 1]);
        let (r1, r2) = (abs_r[tail_start], abs_r[n - 1]);
        let bound = if r2 <= 1e-300 {
            0.0
        } else if r1 > 0.0 && l1 > 0.0 && r1 > r2 {
            let s = (r1 / r2).ln() / (l2 / l1).ln();
            if s > p as f64 + 1.0 {
                r2 * l2.powi(p as i32 + 1) / (s - p as f64 - 1.0)
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };
        tail_bounds.push(bound);
        finite.push(bound.is_finite());
    }
    Ok(ReflectionMeasure { x: xs[x_index], lambdas, abs_r, moments, tail_bounds, finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::Expr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_operator() {
        let p = PotentialPair::new(Expr::constant(0.0), Expr::constant(1.0), 0.5);
        let xs: Vec<f64> = (0..21).map(|i| -5.0 + 0.5 * i as f64).collect();
        let mp = riccati_m(&p, &xs, c(-1.0, 0.0), Side::Plus, &Default::default()).unwrap();
        let mm = riccati_m(&p, &xs, c(-1.0, 0.0), Side::Minus, &Default::default()).unwrap();
        for i in 0..xs.len() {
            assert!((mp[i] - c(-1.0, 0.0)).norm() < 1e-12);
            assert!((mm[i] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_coefficients() {
        let l0 = 2.0;
        let p = PotentialPair::new(Expr::constant(1.0), Expr::constant(1.0 / l0), 0.1);
        let xs = [0.0, 1.0];
        let lam = c(0.5, 0.3);
        let mp = riccati_m(&p, &xs, lam, Side::Plus, &Default::default()).unwrap();
        let exact = -(1.0 - lam / l0).sqrt();
        assert!((mp[0] - exact).norm() < 1e-12);
        let mp0 = riccati_m(&p, &xs, c(0.0, 0.0), Side::Plus, &Default::default()).unwrap();
        let mm0 = riccati_m(&p, &xs, c(0.0, 0.0), Side::Minus, &Default::default()).unwrap();
        assert!(((mm0[0] - mp0[0]) - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn stationary_pair_closed_form() {
        let y = Expr::sum(vec![Expr::constant(1.0), Expr::GaussBump { amp: 0.3, width: 1.0, center: 0.0 }]);
        let l0 = 1.0;
        let p = PotentialPair::stationary(y.clone(), l0, 0.5);
        let xs: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let opts = RiccatiOptions { margin: 8.0, ..Default::default() };
        let xi = c(l0, 2.0);
        let mp = riccati_m(&p, &xs, xi, Side::Plus, &opts).unwrap();
        let mm = riccati_m(&p, &xs, xi, Side::Minus, &opts).unwrap();
        let r = (xi - l0).sqrt();
        for (i, &x) in xs.iter().enumerate() {
            let j = y.jet(x);
            let a0 = -j.deriv(1) / (4.0 * j.value());
            let ep = a0 + Complex64::i() * r * j.value().sqrt();
            let em = a0 - Complex64::i() * r * j.value().sqrt();
            assert!((mp[i] - ep).norm() / ep.norm() < 1e-8, "x = {x}");
            assert!((mm[i] - em).norm() / em.norm() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn herglotz_and_green_function() {
        let p = PotentialPair::new(
            Expr::sum(vec![Expr::constant(1.0), Expr::Sech2 { amp: -2.0, kappa: 1.0, center: 0.0 }]),
            Expr::constant(1.0),
            0.5,
        );
        let xs: Vec<f64> = (0..41).map(|i| -20.0 + i as f64).collect();
        let lams = [c(0.5, 1.0), c(3.0, 0.5), c(-1.0, 2.0)];
        let f = WeylField::compute(&p, &xs, &lams, &Default::default()).unwrap();
        assert!(f.herglotz_violations().is_empty());
        let (g, flagged) = green_diag(&f, &vec![1.0; xs.len()], 1e-12);
        assert!(flagged.is_empty());
        for (l, row) in g.iter().enumerate() {
            for v in row {
                assert!(v.im * lams[l].im > 0.0);
            }
        }
        for row in f.derived(&vec![1.0; xs.len()]).r {
            for v in row {
                assert!(v.norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn free_green_function() {
        let p = PotentialPair::new(Expr::constant(0.0), Expr::constant(1.0), 0.5);
        let f = WeylField::compute(&p, &[0.0, 1.0], &[c(-1.0, 0.0)], &Default::default()).unwrap();
        let (g, _) = green_diag(&f, &[1.0, 1.0], 1e-12);
        assert!((g[0][0] - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn recover_constants() {
        let g = Grid::periodic(0.0, 1.0, 16);
        let q = recover_q_from_m0(&g, &vec![2.0; 16], None, 0.0).unwrap();
        assert!(max_abs(&q.iter().map(|v| v - 1.0).collect::<Vec<_>>()) < 1e-14);
        let q = recover_q_from_m0(&g, &vec![2.0 * 0.7f64.sqrt(); 16], None, 0.0).unwrap();
        assert!((q[3] - 0.7).abs() < 1e-14);
        assert!(matches!(recover_q_from_m0(&g, &vec![-1.0; 16], None, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn recover_q_roundtrip() {
        let p = PotentialPair::new(
            Expr::sum(vec![Expr::constant(1.0), Expr::GaussBump { amp: 0.5, width: 1.0, center: 0.0 }]),
            Expr::constant(1.0),
            0.5,
        );
        let g = Grid::line(-6.0, 6.0, 241);
        let xs = g.points();
        let opts = RiccatiOptions { margin: 10.0, ..Default::default() };
        let mp = riccati_m(&p, &xs, c(0.0, 0.0), Side::Plus, &opts).unwrap();
        let mm = riccati_m(&p, &xs, c(0.0, 0.0), Side::Minus, &opts).unwrap();
        let m0: Vec<f64> = (0..g.n).map(|i| (mm[i] - mp[i]).re).collect();
        let q = recover_q_from_m0(&g, &m0, None, 0.0).unwrap();
        let exact = g.sample(|x| 1.0 + 0.5 * (-x * x).exp());
        assert!(crate::grid::max_abs_diff(&q, &exact) < 1e-6);
        let n0 = n0_from_m0(&g, &m0);
        let n0_direct: Vec<f64> = (0..g.n).map(|i| (mm[i] + mp[i]).re).collect();
        assert!(crate::grid::max_abs_diff(&n0, &n0_direct) < 1e-6);
    }

    #[test]
    fn seed_check_rejects_rough_tail() {
        let p = PotentialPair::new(Expr::Sin { amp: 1.0, freq: 1.0, phase: 0.3 }, Expr::constant(1.0), 0.5);
        let r = riccati_m(&p, &[0.0, 1.0], c(-1.0, 0.0), Side::Plus, &Default::default());
        assert!(matches!(r, Err(Error::SeedInvalid { .. })));
    }

    #[test]
    fn extrapolation_is_exact_for_quadratics() {
        let e = [1e-2, 1e-3, 1e-4];
        let v: Vec<Complex64> = e.iter().map(|x| c(1.0 + 3.0 * x - 7.0 * x * x, -2.0 * x)).collect();
        assert!((extrapolate_to_zero(&e, &v) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn free_operator_has_no_reflection() {
        let p = PotentialPair::new(Expr::constant(0.0), Expr::constant(1.0), 0.5);
        let xs: Vec<f64> = (0..11).map(|i| -5.0 + i as f64).collect();
        let opts = ReflectionOptions { lambda_min: 0.1, lambda_max: 5.0, samples: 11, ..Default::default() };
        let m = reflection_measure(&p, &xs, 5, &Default::default(), &opts).unwrap();
        assert!(m.abs_r.iter().all(|r| *r < 1e-6), "{:?}", m.abs_r);
        assert!(m.moments.iter().all(|v| v.abs() < 1e-5), "{:?}", m.moments);
    }
}
