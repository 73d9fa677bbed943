//! The canonical potential `q̃` of a density and its stationarity, plus the
//! zero-curvature residual evaluated on grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HierarchyIndex;
use crate::diffpoly::{rat, Generator, Laurent};
use crate::error::{Error, Result};
use crate::grid::{max_abs, Grid};

fn check_density(y: &[f64], delta: f64) -> Result<()> {
    match y.iter().position(|&v| !(v >= delta)) {
        Some(i) => Err(Error::Domain(format!("density y[{i}] = {} is below delta = {delta}", y[i]))),
        None => Ok(()),
    }
}

/// `q̃ = -y_xx/(4y) + (5/16)(y_x/y)^2` on a grid.
pub fn tilde_q(grid: &Grid, y: &[f64], delta: f64) -> Result<Vec<f64>> {
    grid.check_len(y)?;
    check_density(y, delta)?;
    let yx = grid.derivative(y, 1);
    let yxx = grid.derivative(y, 2);
    Ok(y.iter().zip(yx.iter().zip(&yxx)).map(|(&y, (&d1, &d2))| tilde_q_point(y, d1, d2)).collect())
}

pub fn tilde_q_point(y: f64, yx: f64, yxx: f64) -> f64 {
    -yxx / (4.0 * y) + 5.0 / 16.0 * (yx / y).powi(2)
}

/// `q̃` for `y = s^(-4)`, which is `s_xx / s`.
pub fn tilde_q_symbolic(s: &Generator) -> Laurent {
    Laurent::new(s.deriv(2), s, -1)
}

/// Left side of the stationarity lemma with `ũ_0 = 1/sqrt(y) = s^2`,
/// `y = s^(-4)` and a designated constant `λ0`; identically zero.
pub fn stationary_lemma_residual() -> Laurent {
    let s = Generator::function("s");
    let l0 = Laurent::poly(Generator::constant("lambda0").poly(), &s);
    let y = Laurent::power(&s, -4);
    let q = &tilde_q_symbolic(&s) + &(&l0 * &y);
    let u = Laurent::power(&s, 2);
    let a = (&u.dx() * &q).scale(&rat(2, 1));
    let b = &u * &q.dx();
    let c = u.dx_n(3).scale(&rat(1, 2));
    &(&a + &b) - &c
}

/// `2u_x q + u q_x - u_xxx/2` on a grid.
fn lenard_grid(grid: &Grid, u: &[f64], q: &[f64]) -> Vec<f64> {
    let ux = grid.derivative(u, 1);
    let uxxx = grid.derivative(u, 3);
    let qx = grid.derivative(q, 1);
    (0..u.len()).map(|i| 2.0 * ux[i] * q[i] + u[i] * qx[i] - 0.5 * uxxx[i]).collect()
}

/// `2u_x y + u y_x` on a grid.
fn transport_grid(grid: &Grid, u: &[f64], y: &[f64]) -> Vec<f64> {
    let ux = grid.derivative(u, 1);
    let yx = grid.derivative(y, 1);
    (0..u.len()).map(|i| 2.0 * ux[i] * y[i] + u[i] * yx[i]).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationaryReport {
    pub r: usize,
    pub k: usize,
    pub lambda0: f64,
    /// Max-norm residual of each equation of the system, `λ^0` first.
    pub equation_residuals: Vec<f64>,
    /// Max-norm of the flow right-hand side (the computed `q_t`).
    pub flow_residual: f64,
    pub max_residual: f64,
}

/// Evaluates the system at `q = q̃ + λ0 y`, `u_0 = … = u_r = 1/sqrt(y)`,
/// `q_t = y_t = 0`.
pub fn stationary_check(grid: &Grid, y: &[f64], lambda0: f64, idx: HierarchyIndex, delta: f64) -> Result<StationaryReport> {
    let qt = tilde_q(grid, y, delta)?;
    let q: Vec<f64> = qt.iter().zip(y).map(|(a, b)| a + lambda0 * b).collect();
    let u0: Vec<f64> = y.iter().map(|v| 1.0 / v.sqrt()).collect();
    let len = lenard_grid(grid, &u0, &q);
    let tr = transport_grid(grid, &u0, y);
    let n = y.len();
    let zero = vec![0.0; n];
    let mut equation_residuals = Vec::with_capacity(idx.r + 2);
    for j in 0..=idx.r + 1 {
        let a = if j <= idx.r { &len } else { &zero };
        let b = if j >= 1 { &tr } else { &zero };
        let e: Vec<f64> = (0..n).map(|i| a[i] - b[i]).collect();
        equation_residuals.push(max_abs(&e));
    }
    let flow: Vec<f64> = (0..n).map(|i| len[i] - if idx.k >= 1 { tr[i] } else { 0.0 }).collect();
    let flow_residual = max_abs(&flow);
    let max_residual = equation_residuals.iter().copied().fold(flow_residual, f64::max);
    Ok(StationaryReport { r: idx.r, k: idx.k, lambda0, equation_residuals, flow_residual, max_residual })
}

/// Residual of `2(√y)_x z̃ + √y z̃_x - (√y)_xxx/2` where `z̃` is the
/// canonical potential of `z = 1/y`.
pub fn ex_stationary_residual(grid: &Grid, y: &[f64], delta: f64) -> Result<f64> {
    check_density(y, delta)?;
    let z: Vec<f64> = y.iter().map(|v| 1.0 / v).collect();
    let zt = tilde_q(grid, &z, 0.0)?;
    let sy: Vec<f64> = y.iter().map(|v| v.sqrt()).collect();
    Ok(max_abs(&lenard_grid(grid, &sy, &zt)))
}

/// Grid data for the zero-curvature residual at one time.
#[derive(Clone, Debug)]
pub struct ZcGridData<'a> {
    pub grid: &'a Grid,
    pub q: &'a [f64],
    pub y: &'a [f64],
    pub q_t: &'a [f64],
    pub y_t: &'a [f64],
    /// `u_0 .. u_r` samples.
    pub u: &'a [Vec<f64>],
    pub k: usize,
}

/// Max-norm of `λ^k A_t - B_x + [A, B]` for each λ. With `B` built from
/// `U`, only the lower-left entry
/// `λ^k (q_t - λy_t) + U_xxx/2 - (q - λy)_x U - 2(q - λy) U_x`
/// can be nonzero.
pub fn zero_curvature_residual_grid(data: &ZcGridData<'_>, lambdas: &[Complex64]) -> Result<Vec<f64>> {
    let g = data.grid;
    for v in [data.q, data.y, data.q_t, data.y_t] {
        g.check_len(v)?;
    }
    for u in data.u {
        g.check_len(u)?;
    }
    let d = |v: &[f64], m| g.derivative(v, m);
    let (qx, yx) = (d(data.q, 1), d(data.y, 1));
    let ux: Vec<Vec<f64>> = data.u.iter().map(|u| d(u, 1)).collect();
    let uxxx: Vec<Vec<f64>> = data.u.iter().map(|u| d(u, 3)).collect();
    let n = g.n;
    Ok(lambdas
        .iter()
        .map(|&lam| {
            let eta = lam.powu(data.k as u32);
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let mut big_u = Complex64::new(0.0, 0.0);
                let mut big_ux = big_u;
                let mut big_uxxx = big_u;
                let mut p = Complex64::new(1.0, 0.0);
                for j in 0..data.u.len() {
                    big_u += p * data.u[j][i];
                    big_ux += p * ux[j][i];
                    big_uxxx += p * uxxx[j][i];
                    p *= lam;
                }
                let w = data.q[i] - lam * data.y[i];
                let wx = qx[i] - lam * yx[i];
                let wt = data.q_t[i] - lam * data.y_t[i];
                let r = eta * wt + 0.5 * big_uxxx - wx * big_u - 2.0 * w * big_ux;
                worst = worst.max(r.norm());
            }
            worst
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn canonical_potential_of_constant_density_is_zero() {
        let g = Grid::periodic(0.0, 2.0 * PI, 32);
        assert!(max_abs(&tilde_q(&g, &vec![1.0; 32], 0.1).unwrap()) < 1e-14);
    }

    #[test]
    fn exponential_density_gives_quarter() {
        // y = e^{2x}: -4/4 + (5/16)·4 = 1/4 pointwise
        let x: f64 = 0.7;
        let y = (2.0 * x).exp();
        assert!((tilde_q_point(y, 2.0 * y, 4.0 * y) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn spectral_and_finite_difference_agree() {
        let gp = Grid::periodic(-20.0, 20.0, 1024);
        let gl = Grid::line(-20.0, 20.0, 4097);
        let f = |x: f64| 1.0 + 0.5 * (-x * x).exp();
        let a = tilde_q(&gp, &gp.sample(f), 0.5).unwrap();
        let b = tilde_q(&gl, &gl.sample(f), 0.5).unwrap();
        // points common to both grids
        for x in [0.0, 5.0, -5.0, 1.25, -0.625] {
            let ip = ((x + 20.0) / gp.h()).round() as usize;
            let il = ((x + 20.0) / gl.h()).round() as usize;
            assert!((a[ip] - b[il]).abs() < 1e-8, "x={x}: {} vs {}", a[ip], b[il]);
        }
    }

    #[test]
    fn low_density_is_rejected() {
        let g = Grid::periodic(0.0, 1.0, 8);
        assert!(matches!(tilde_q(&g, &[0.01; 8], 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn lemma_holds_symbolically() {
        assert!(stationary_lemma_residual().is_zero());
    }

    #[test]
    fn free_pair_is_stationary() {
        let g = Grid::periodic(0.0, 2.0 * PI, 64);
        let rep = stationary_check(&g, &vec![1.0; 64], 0.0, HierarchyIndex::new(1, 0).unwrap(), 0.1).unwrap();
        assert!(rep.max_residual < 1e-14);
    }

    #[test]
    fn ex_equation_has_stationary_solution() {
        let g = Grid::periodic(0.0, 2.0 * PI, 256);
        let y = g.sample(|x| 1.0 + 0.4 * x.cos());
        assert!(ex_stationary_residual(&g, &y, 0.1).unwrap() < 1e-9);
    }

    #[test]
    fn zc_grid_negative_control() {
        let g = Grid::periodic(0.0, 2.0 * PI, 64);
        let q = g.sample(|x| x.sin());
        let y = g.sample(|x| 1.0 + 0.2 * x.cos());
        let zero = vec![0.0; 64];
        let u = vec![g.sample(|x| (2.0 * x).cos()), vec![1.0; 64]];
        let data = ZcGridData { grid: &g, q: &q, y: &y, q_t: &zero, y_t: &zero, u: &u, k: 0 };
        let r = zero_curvature_residual_grid(&data, &[Complex64::new(0.0, 1.0)]).unwrap();
        assert!(r[0] > 0.1);
    }
}
