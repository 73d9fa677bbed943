//! Algebro-geometric pairs: poles moving on the real cycles of the curve
//! `k² = -(λ - λ₀)(λ - λ₁)⋯(λ - λ_{2g})`, the trace formulas that rebuild
//! `(q, y)` from them, and the Weyl functions in closed form.
//!
//! A pole is carried as `(P_j, w_j)` with `w_j² = R(P_j) = k(P_j)²`, so the
//! sign of `w_j` is the sheet. In these variables the motion
//! `P_{j,x} = F_j w_j`, `w_{j,x} = R'(P_j) F_j / 2` is smooth through the
//! gap edges, where the sheet flips.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{max_abs, Grid, Spectral};
use crate::hierarchy::tilde_q;
use crate::ode::{rk4_step, Dopri5};
use crate::pair::Func;

/// Real branch points `λ₀ < λ₁ < ⋯ < λ_{2g}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    branch: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(branch: Vec<f64>) -> Result<Self> {
        if branch.len() % 2 == 0 {
            return Err(Error::InvalidArgument("a curve needs an odd number of branch points".into()));
        }
        if branch.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("branch points must be strictly increasing".into()));
        }
        if !(branch.iter().product::<f64>() > 0.0) {
            return Err(Error::Domain("k(0)² = λ₀λ₁⋯λ_{2g} must be positive".into()));
        }
        Ok(SpectralCurve { branch })
    }

    pub fn genus(&self) -> usize {
        self.branch.len() / 2
    }

    pub fn branch_points(&self) -> &[f64] {
        &self.branch
    }

    /// `I_j = [λ_{2j-1}, λ_{2j}]`, `j = 1..=g`.
    pub fn gap(&self, j: usize) -> (f64, f64) {
        (self.branch[2 * j - 1], self.branch[2 * j])
    }

    /// Positive `k(0)`.
    pub fn k0(&self) -> f64 {
        self.branch.iter().product::<f64>().sqrt()
    }

    /// `R(P) = -Π(P - λᵢ)`.
    pub fn radicand(&self, p: f64) -> f64 {
        -self.branch.iter().map(|l| p - l).product::<f64>()
    }

    pub fn radicand_derivative(&self, p: f64) -> f64 {
        let n = self.branch.len();
        -(0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| p - self.branch[j]).product::<f64>()).sum::<f64>()
    }

    /// `k(P_λ) = (-1)^g √(λ₀ - λ) Π_j √(λ - λ_{2j-1}) √(λ - λ_{2j})` with
    /// principal roots. It is positive below `λ₀` and equals `k(0)` at 0.
    pub fn k_at(&self, lambda: Complex64) -> Complex64 {
        let g = self.genus();
        let mut k = (Complex64::new(self.branch[0], 0.0) - lambda).sqrt();
        for j in 1..=g {
            let (a, b) = self.gap(j);
            k *= (lambda - a).sqrt() * (lambda - b).sqrt();
        }
        if g % 2 == 1 {
            -k
        } else {
            k
        }
    }

    fn sum_gap_edges(&self) -> f64 {
        self.branch[0] + (1..=self.genus()).map(|j| self.gap(j).0 + self.gap(j).1).sum::<f64>()
    }
}

/// `k(P)` on the given sheet when `R(P) ≥ 0`; the principal value of
/// `√R(P)` otherwise.
pub fn curve_sqrt(curve: &SpectralCurve, p: f64, sheet: i8) -> Complex64 {
    let r = curve.radicand(p);
    if r >= 0.0 {
        Complex64::new(f64::from(sheet.signum()) * r.sqrt(), 0.0)
    } else {
        Complex64::new(r, 0.0).sqrt()
    }
}

/// Initial poles `P_j ∈ I_j` with sheets `σ_j = ±1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleConfiguration {
    pub positions: Vec<f64>,
    pub sheets: Vec<i8>,
}

impl PoleConfiguration {
    pub fn validate(&self, curve: &SpectralCurve) -> Result<()> {
        let g = curve.genus();
        if self.positions.len() != g || self.sheets.len() != g {
            return Err(Error::ShapeMismatch(format!("expected {g} poles and sheets")));
        }
        for j in 1..=g {
            let (a, b) = curve.gap(j);
            let p = self.positions[j - 1];
            if !(p >= a && p <= b) {
                return Err(Error::Domain(format!("pole {j} at {p} is outside its gap [{a}, {b}]")));
            }
            if self.sheets[j - 1].abs() != 1 {
                return Err(Error::InvalidArgument("sheets must be +1 or -1".into()));
            }
        }
        Ok(())
    }

    fn state(&self, curve: &SpectralCurve) -> Vec<f64> {
        let mut s = self.positions.clone();
        s.extend(self.positions.iter().zip(&self.sheets).map(|(p, sg)| f64::from(*sg) * curve.radicand(*p).max(0.0).sqrt()));
        s
    }
}

/// Source of `ℳ₀`.
#[derive(Clone, Debug)]
pub enum M0Spec {
    /// A prescribed positive function of `x`.
    Given(Func),
    /// `ℳ₀ = 2k(0)/|ΠPᵢ|`, which makes `y ≡ 1`.
    Schrodinger,
}

impl M0Spec {
    pub fn constant(c: f64) -> Self {
        M0Spec::Given(Func::Expr(crate::pair::Expr::constant(c)))
    }

    /// `(ℳ₀, ℳ₀,ₓ)` given the poles and their x-derivatives.
    fn value(&self, curve: &SpectralCurve, x: f64, p: &[f64], px: Option<&[f64]>) -> (f64, f64) {
        match self {
            M0Spec::Given(f) => {
                let j = f.jet(x);
                (j.value(), j.deriv(1))
            }
            M0Spec::Schrodinger => {
                let m = 2.0 * curve.k0() / p.iter().product::<f64>().abs();
                let dx = px.map_or(0.0, |px| -m * p.iter().zip(px).map(|(a, b)| b / a).sum::<f64>());
                (m, dx)
            }
        }
    }
}

/// Signed product evaluated through logarithms when there are many factors.
fn product(v: impl Iterator<Item = f64> + Clone, count: usize) -> f64 {
    if count <= 3 {
        return v.product();
    }
    let sign: f64 = v.clone().map(f64::signum).product();
    sign * v.map(|a| a.abs().ln()).sum::<f64>().exp()
}

/// `F_j = (-1)^g ℳ₀ ΠPᵢ / (k(0) Π_{s≠j}(P_j - P_s))`.
fn speed_factors(curve: &SpectralCurve, m0: f64, p: &[f64], x: f64) -> Result<Vec<f64>> {
    let g = p.len();
    let sign = if g % 2 == 1 { -1.0 } else { 1.0 };
    let prod = product(p.iter().copied(), g);
    (0..g)
        .map(|j| {
            for s in 0..g {
                if s != j && (p[j] - p[s]).abs() < 1e-12 {
                    return Err(Error::Collision { i: j, j: s, x });
                }
            }
            let denom = product((0..g).filter(|&s| s != j).map(|s| p[j] - p[s]), g);
            Ok(sign * m0 * prod / (curve.k0() * denom))
        })
        .collect()
}

/// Poles, their `w`, and derived quantities along `x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoleTrajectory {
    pub x: Vec<f64>,
    /// `p[i][j]`: pole `j` at node `i`.
    pub p: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    /// `P_{j,x}` from the equations of motion.
    pub px: Vec<Vec<f64>>,
    pub m0: Vec<f64>,
    pub m0_x: Vec<f64>,
    /// Largest distance by which the integrator left a gap before the
    /// projection back.
    pub max_excursion: f64,
}

impl PoleTrajectory {
    pub fn sheets(&self, i: usize) -> Vec<i8> {
        self.w[i].iter().map(|w| if *w < 0.0 { -1 } else { 1 }).collect()
    }

    pub fn genus(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    /// Checks `P_j(x) ∈ I_j` at every node.
    pub fn confined(&self, curve: &SpectralCurve) -> bool {
        self.p.iter().all(|row| row.iter().enumerate().all(|(j, p)| {
            let (a, b) = curve.gap(j + 1);
            *p >= a && *p <= b
        }))
    }

    fn from_states(curve: &SpectralCurve, m0: &M0Spec, xs: &[f64], states: &[Vec<f64>], excursion: f64) -> Result<Self> {
        let g = curve.genus();
        let mut t = PoleTrajectory { x: xs.to_vec(), p: vec![], w: vec![], px: vec![], m0: vec![], m0_x: vec![], max_excursion: excursion };
        for (i, s) in states.iter().enumerate() {
            let (p, w) = (s[..g].to_vec(), s[g..].to_vec());
            let (mv, _) = m0.value(curve, xs[i], &p, None);
            let f = speed_factors(curve, mv, &p, xs[i])?;
            let px: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
            let (mv, mx) = m0.value(curve, xs[i], &p, Some(&px));
            t.p.push(p);
            t.w.push(w);
            t.px.push(px);
            t.m0.push(mv);
            t.m0_x.push(mx);
        }
        Ok(t)
    }
}

/// Right-hand side of the `(P, w)` system.
fn pole_rhs(curve: &SpectralCurve, m0: &M0Spec, x: f64, s: &[f64], ds: &mut [f64]) -> Result<()> {
    let g = curve.genus();
    let (p, w) = s.split_at(g);
    let (mv, _) = m0.value(curve, x, p, None);
    let f = speed_factors(curve, mv, p, x)?;
    for j in 0..g {
        ds[j] = f[j] * w[j];
        ds[g + j] = 0.5 * curve.radicand_derivative(p[j]) * f[j];
    }
    Ok(())
}

/// Projects `P_j` into `I_j` and resets `|w_j| = √R(P_j)`, keeping signs.
/// Returns the distance moved.
fn project(curve: &SpectralCurve, s: &mut [f64]) -> f64 {
    let g = curve.genus();
    let mut moved: f64 = 0.0;
    for j in 0..g {
        let (a, b) = curve.gap(j + 1);
        let c = s[j].clamp(a, b);
        moved = moved.max((s[j] - c).abs());
        s[j] = c;
        let sign = if s[g + j] < 0.0 { -1.0 } else { 1.0 };
        s[g + j] = sign * curve.radicand(c).max(0.0).sqrt();
    }
    moved
}

fn integrate_poles(curve: &SpectralCurve, m0: &M0Spec, x0: f64, s0: &[f64], xs: &[f64], ode: &Dopri5) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut err = None;
    let mut out = Vec::with_capacity(xs.len());
    let mut excursion: f64 = 0.0;
    let rhs = |x: f64, s: &[f64], ds: &mut [f64]| {
        if let Err(e) = pole_rhs(curve, m0, x, s, ds) {
            err.get_or_insert(e);
            ds.iter_mut().for_each(|d| *d = 0.0);
        }
    };
    ode.integrate_with(rhs, x0, s0, xs, |_, s| {
        let mut s = s.to_vec();
        excursion = excursion.max(project(curve, &mut s));
        out.push(s.clone());
        Some(s)
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((out, excursion))
}

/// Pole trajectories at increasing nodes `xs`, started from `init` at `x0`.
pub fn pole_motion_x(curve: &SpectralCurve, m0: &M0Spec, init: &PoleConfiguration, x0: f64, xs: &[f64], ode: &Dopri5) -> Result<PoleTrajectory> {
    init.validate(curve)?;
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("nodes must be strictly increasing".into()));
    }
    let s0 = init.state(curve);
    let split = xs.partition_point(|x| *x < x0);
    let left: Vec<f64> = xs[..split].iter().rev().copied().collect();
    let (mut lstates, e1) = integrate_poles(curve, m0, x0, &s0, &left, ode)?;
    let (rstates, e2) = integrate_poles(curve, m0, x0, &s0, &xs[split..], ode)?;
    lstates.reverse();
    lstates.extend(rstates);
    PoleTrajectory::from_states(curve, m0, xs, &lstates, e1.max(e2))
}

/// Period of a genus-one trajectory with constant `ℳ₀ = m0`, by
/// quadrature of `dx = dP / P_x` over one cycle. The substitution
/// `P = λ₁ + (λ₂ - λ₁)(1 - cos θ)/2` removes the edge singularities.
pub fn genus_one_period(curve: &SpectralCurve, m0: f64) -> Result<f64> {
    if curve.genus() != 1 {
        return Err(Error::InvalidArgument("period oracle is for genus one".into()));
    }
    let (a, b) = curve.gap(1);
    let l0 = curve.branch_points()[0];
    let f = |th: f64| {
        let p = a + (b - a) * (1.0 - th.cos()) / 2.0;
        let speed = m0 * p.abs() / curve.k0();
        1.0 / (speed * (p - l0).sqrt())
    };
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let v: Vec<f64> = (0..=n).map(|i| f(i as f64 * h)).collect();
    Ok(2.0 * crate::grid::simpson(&v, h))
}

/// Distance between the first two returns of `w` to zero from above,
/// located by secant refinement on the integrator.
pub fn measured_period(curve: &SpectralCurve, m0: &M0Spec, init: &PoleConfiguration, span: f64, ode: &Dopri5) -> Result<f64> {
    let n = (span / 0.01).ceil() as usize;
    let xs: Vec<f64> = (1..=n).map(|i| span * i as f64 / n as f64).collect();
    let tr = pole_motion_x(curve, m0, init, 0.0, &xs, ode)?;
    let g = curve.genus();
    let mut crossings = Vec::new();
    for i in 1..xs.len() {
        let (w0, w1) = (tr.w[i - 1][0], tr.w[i][0]);
        if w0 > 0.0 && w1 <= 0.0 {
            let mut s: Vec<f64> = tr.p[i - 1].clone();
            s.extend(&tr.w[i - 1]);
            // secant iterations on the unprojected flow
            let (mut xa, mut xb) = (xs[i - 1], xs[i]);
            let eval = |x: f64| -> Result<f64> {
                let r = ode.integrate(|xx, u, du| { let _ = pole_rhs(curve, m0, xx, u, du); }, xs[i - 1], &s, &[x])?;
                Ok(r[0][g])
            };
            let (mut fa, mut fb) = (w0, eval(xb)?);
            for _ in 0..40 {
                if (fb - fa).abs() < 1e-300 {
                    break;
                }
                let xc = xb - fb * (xb - xa) / (fb - fa);
                let fc = eval(xc)?;
                xa = xb;
                fa = fb;
                xb = xc;
                fb = fc;
                if fb.abs() < 1e-14 {
                    break;
                }
            }
            crossings.push(xb);
            if crossings.len() == 2 {
                return Ok(crossings[1] - crossings[0]);
            }
        }
    }
    Err(Error::InvalidArgument("span too short to contain two full cycles".into()))
}

/// `y = ℳ₀² ΠPᵢ² / (4k(0)²)` and `q = y(λ₀ + Σ[λ_{2i} + λ_{2i-1} - 2Pᵢ]) + q̃`
/// on a grid whose nodes are the trajectory's.
pub fn trace_formulas(curve: &SpectralCurve, traj: &PoleTrajectory, grid: &Grid, delta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    grid.check_len(&traj.m0)?;
    let k0 = curve.k0();
    let y: Vec<f64> = (0..grid.n)
        .map(|i| traj.m0[i].powi(2) * traj.p[i].iter().map(|p| p * p).product::<f64>() / (4.0 * k0 * k0))
        .collect();
    if let Some(i) = y.iter().position(|v| !(*v >= delta)) {
        return Err(Error::Domain(format!("reconstructed y = {} below delta at x = {}", y[i], grid.x(i))));
    }
    let qt = tilde_q(grid, &y, delta)?;
    let s = curve.sum_gap_edges();
    let q = (0..grid.n).map(|i| y[i] * (s - 2.0 * traj.p[i].iter().sum::<f64>()) + qt[i]).collect();
    Ok((q, y))
}

/// `(m₊, m₋)` at each trajectory node from
/// `m± = (±2k(P_λ) + H_x)/(2H)`, `H = 2(-1)^{g+1}k(0)/(ℳ₀ΠPᵢ) Π(λ - Pᵢ)`,
/// with `H_x` from the equations of motion.
pub fn weyl_from_poles(curve: &SpectralCurve, traj: &PoleTrajectory, lambda: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if lambda.im == 0.0 && lambda.re >= curve.branch_points()[0] {
        return Err(Error::Domain("λ must be off the real axis or below λ₀".into()));
    }
    let g = curve.genus();
    let k = curve.k_at(lambda);
    let sign = if g % 2 == 0 { -1.0 } else { 1.0 };
    let mut mp = Vec::with_capacity(traj.x.len());
    let mut mm = Vec::with_capacity(traj.x.len());
    for i in 0..traj.x.len() {
        let p = &traj.p[i];
        let px = &traj.px[i];
        let prod: f64 = p.iter().product();
        let mut h = Complex64::new(sign * 2.0 * curve.k0() / (traj.m0[i] * prod), 0.0);
        let mut log_dx = Complex64::new(-traj.m0_x[i] / traj.m0[i], 0.0);
        for j in 0..g {
            h *= lambda - p[j];
            log_dx -= px[j] / p[j] + px[j] / (lambda - p[j]);
        }
        mp.push(k / h + 0.5 * log_dx);
        mm.push(-k / h + 0.5 * log_dx);
    }
    Ok((mp, mm))
}

/// `U_x` coefficients from the pole relation
/// `U_x(λ) = λ^k ℳ₀,t/ℳ₀ - (ℳ₀,ₓ/ℳ₀)U(λ) + Σ [λ^k U(Pᵢ)/Pᵢ^k - U(λ)] λP_{i,x}/(Pᵢ(λ - Pᵢ))`.
pub fn u_x_relation(u: &[f64], k: usize, p: &[f64], px: &[f64], m0: f64, m0_x: f64, m0_t: f64) -> Vec<f64> {
    let r = u.len() - 1;
    let mut out: Vec<f64> = u.iter().map(|c| -m0_x / m0 * c).collect();
    if k <= r {
        out[k] += m0_t / m0;
    }
    for (pi, pxi) in p.iter().zip(px) {
        let u_at: f64 = u.iter().rev().fold(0.0, |acc, c| acc * pi + c);
        // N(λ) = λ^k U(Pᵢ)/Pᵢ^k - U(λ), which vanishes at Pᵢ
        let mut n: Vec<f64> = u.iter().map(|c| -c).collect();
        n[k] += u_at / pi.powi(k as i32);
        // synthetic division by (λ - Pᵢ)
        let mut quot = vec![0.0; r];
        let mut carry = 0.0;
        for m in (1..=r).rev() {
            carry = n[m] + carry * pi;
            quot[m - 1] = carry;
        }
        // multiply by λ P_x / P
        for (m, qm) in quot.iter().enumerate() {
            out[m + 1] += qm * pxi / pi;
        }
    }
    out
}

/// `U` along a trajectory by integrating [`u_x_relation`] jointly with the
/// poles from `u_start` at the first node.
pub fn u_by_quadrature(curve: &SpectralCurve, m0: &M0Spec, traj: &PoleTrajectory, k: usize, u_start: &[f64], m0_t: f64, ode: &Dopri5) -> Result<Vec<Vec<f64>>> {
    let g = curve.genus();
    let mut s: Vec<f64> = traj.p[0].clone();
    s.extend(&traj.w[0]);
    s.extend_from_slice(u_start);
    let mut err = None;
    let rhs = |x: f64, st: &[f64], ds: &mut [f64]| {
        if let Err(e) = pole_rhs(curve, m0, x, &st[..2 * g], &mut ds[..2 * g]) {
            err.get_or_insert(e);
            return;
        }
        let p = &st[..g];
        let px: Vec<f64> = (0..g).map(|j| ds[j]).collect();
        let (mv, mx) = m0.value(curve, x, p, Some(&px));
        let ux = u_x_relation(&st[2 * g..], k, p, &px, mv, mx, m0_t);
        ds[2 * g..].copy_from_slice(&ux);
    };
    let out = ode.integrate(rhs, traj.x[0], &s, &traj.x)?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(out.into_iter().map(|v| v[2 * g..].to_vec()).collect())
}

/// Result of the time-dependent pole motion.
#[derive(Clone, Debug)]
pub struct TimeRun {
    pub t: Vec<f64>,
    pub frames: Vec<PoleTrajectory>,
    /// Largest `|∂ₓP_j - F_j w_j|` over frames, relative to `max|F_j w_j|`.
    pub mixed_residual: f64,
}

/// Evolves the poles in `t` by `P_{j,t} = U(P_j)/P_j^k · P_{j,x}` (and
/// `w_{j,t} = R'(P_j)/(2 w_j) · P_{j,t}`) at every node of a periodic
/// grid, with RK4 steps of size `dt`. `u_of(t, frame)` supplies the
/// coefficients `u_0..u_r` of `U` at each node. `ℳ₀` is taken
/// independent of `t`.
pub fn pole_motion_t<F>(curve: &SpectralCurve, m0: &M0Spec, grid: &Grid, init: &PoleTrajectory, k: usize, mut u_of: F, dt: f64, steps: usize, every: usize) -> Result<TimeRun>
where
    F: FnMut(f64, &PoleTrajectory) -> Result<Vec<Vec<f64>>>,
{
    if !grid.periodic {
        return Err(Error::InvalidArgument("time-dependent pole motion needs a periodic grid".into()));
    }
    grid.check_len(&init.m0)?;
    let g = curve.genus();
    let n = grid.n;
    let xs = grid.points();
    let flat = |t: &PoleTrajectory| -> Vec<f64> { (0..n).flat_map(|i| t.p[i].iter().chain(&t.w[i]).copied().collect::<Vec<_>>()).collect() };
    let unflat = |v: &[f64]| -> Result<PoleTrajectory> {
        let states: Vec<Vec<f64>> = (0..n).map(|i| v[2 * g * i..2 * g * (i + 1)].to_vec()).collect();
        PoleTrajectory::from_states(curve, m0, &xs, &states, 0.0)
    };
    let err = std::cell::RefCell::new(None);
    let mut rhs = |t: f64, v: &[f64], dv: &mut [f64]| {
        let res = (|| -> Result<()> {
            let frame = unflat(v)?;
            let u = u_of(t, &frame)?;
            for i in 0..n {
                for j in 0..g {
                    let p = frame.p[i][j];
                    let u_at: f64 = u.iter().rev().fold(0.0, |acc, c| acc * p + c[i]);
                    let factor = u_at / p.powi(k as i32);
                    let fj = speed_factors(curve, frame.m0[i], &frame.p[i], xs[i])?[j];
                    dv[2 * g * i + j] = factor * frame.px[i][j];
                    dv[2 * g * i + g + j] = factor * 0.5 * curve.radicand_derivative(p) * fj;
                }
            }
            Ok(())
        })();
        if let Err(e) = res {
            err.borrow_mut().get_or_insert(e);
            dv.iter_mut().for_each(|d| *d = 0.0);
        }
    };
    let sp = Spectral::new(n, grid.length());
    let mixed = |frame: &PoleTrajectory| -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..g {
            let pj: Vec<f64> = frame.p.iter().map(|r| r[j]).collect();
            let fw: Vec<f64> = frame.px.iter().map(|r| r[j]).collect();
            let d = sp.derivative(&pj, 1);
            let scale = max_abs(&fw).max(1e-300);
            worst = worst.max(d.iter().zip(&fw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
        }
        worst
    };
    let mut v = flat(init);
    let mut frames = vec![init.clone()];
    let mut ts = vec![0.0];
    let mut residual = mixed(init);
    let mut t = 0.0;
    for step in 1..=steps {
        v = rk4_step(&mut rhs, t, &v, dt);
        if let Some(e) = err.borrow_mut().take() {
            return Err(e);
        }
        for i in 0..n {
            project(curve, &mut v[2 * g * i..2 * g * (i + 1)]);
        }
        t += dt;
        if step % every.max(1) == 0 || step == steps {
            let f = unflat(&v)?;
            residual = residual.max(mixed(&f));
            frames.push(f);
            ts.push(t);
        }
    }
    Ok(TimeRun { t: ts, frames, mixed_residual: residual })
}

/// `U = 1 + uλ` for the CH flow, with `u` from `(2 - ∂²/2)u = y - ω₀` and
/// `y` from the trace formula.
pub fn ch_u_from_trace(curve: &SpectralCurve, grid: &Grid, omega0: f64) -> impl FnMut(f64, &PoleTrajectory) -> Result<Vec<Vec<f64>>> {
    let sp = Spectral::new(grid.n, grid.length());
    let (n, k0) = (grid.n, curve.k0());
    move |_, frame| {
        let y: Vec<f64> = (0..n)
            .map(|i| frame.m0[i].powi(2) * frame.p[i].iter().map(|p| p * p).product::<f64>() / (4.0 * k0 * k0))
            .collect();
        let f: Vec<f64> = y.iter().map(|v| v - omega0).collect();
        Ok(vec![vec![1.0; n], sp.helmholtz_solve(&f, 2.0, 0.5)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::Side;
    use crate::pair::{Expr, PotentialPair};
    use crate::weyl::{riccati_m, RiccatiOptions};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn curve1() -> SpectralCurve {
        SpectralCurve::new(vec![0.5, 1.0, 2.0]).unwrap()
    }

    fn ode() -> Dopri5 {
        Dopri5::with_tol(1e-12, 1e-14)
    }

    #[test]
    fn curve_square_roots() {
        let g0 = SpectralCurve::new(vec![1.0]).unwrap();
        assert!((g0.k0() - 1.0).abs() < 1e-15);
        assert!((g0.k_at(c(0.0, 0.0)) - 1.0).norm() < 1e-15);
        let g1 = SpectralCurve::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((curve_sqrt(&g1, 2.5, 1) - c(0.375f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((curve_sqrt(&g1, 2.5, -1) + c(0.375f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(curve_sqrt(&g1, 2.0, 1), c(0.0, 0.0));
        assert!((g1.k_at(c(0.0, 0.0)) - g1.k0()).norm() < 1e-14);
        assert!(curve_sqrt(&g1, 1.5, 1).im > 0.0);
    }

    #[test]
    fn curve_validation() {
        assert!(SpectralCurve::new(vec![1.0, 2.0]).is_err());
        assert!(SpectralCurve::new(vec![1.0, 0.5, 2.0]).is_err());
        assert!(matches!(SpectralCurve::new(vec![-1.0, 1.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn genus_zero_reduces_to_constants() {
        let curve = SpectralCurve::new(vec![1.0]).unwrap();
        let grid = Grid::line(-2.0, 2.0, 41);
        let xs = grid.points();
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![], sheets: vec![] }, 0.0, &xs, &ode()).unwrap();
        let (q, y) = trace_formulas(&curve, &tr, &grid, 0.1).unwrap();
        assert!(q.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let pair = PotentialPair::new(Expr::constant(1.0), Expr::constant(1.0), 0.5);
        let lam = c(0.0, 2.0);
        let (mp, mm) = weyl_from_poles(&curve, &tr, lam).unwrap();
        let rp = riccati_m(&pair, &xs, lam, Side::Plus, &Default::default()).unwrap();
        let rm = riccati_m(&pair, &xs, lam, Side::Minus, &Default::default()).unwrap();
        for i in 0..xs.len() {
            assert!((mp[i] - rp[i]).norm() < 1e-8 * rp[i].norm());
            assert!((mm[i] - rm[i]).norm() < 1e-8 * rm[i].norm());
        }
    }

    #[test]
    fn genus_one_poles_stay_in_the_gap_and_match_the_period() {
        let curve = curve1();
        let init = PoleConfiguration { positions: vec![1.5], sheets: vec![1] };
        let xs: Vec<f64> = (1..=2000).map(|i| 0.01 * i as f64).collect();
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &init, 0.0, &xs, &ode()).unwrap();
        assert!(tr.confined(&curve));
        assert!(tr.max_excursion < 1e-8, "{}", tr.max_excursion);
        let lo = tr.p.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
        let hi = tr.p.iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!(lo < 1.001 && hi > 1.999);
        let oracle = genus_one_period(&curve, 2.0).unwrap();
        let measured = measured_period(&curve, &M0Spec::constant(2.0), &init, 3.0 * oracle, &ode()).unwrap();
        assert!((oracle - measured).abs() < 1e-7, "{oracle} vs {measured}");
    }

    #[test]
    fn sheet_flips_at_the_gap_edge() {
        // P_x = -2k(P)P: with σ = -1 the pole climbs to λ₂ = 2
        let curve = curve1();
        let init = PoleConfiguration { positions: vec![1.5], sheets: vec![-1] };
        let xs: Vec<f64> = (1..=300).map(|i| 0.005 * i as f64).collect();
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &init, 0.0, &xs, &ode()).unwrap();
        let top = (0..xs.len()).max_by(|&a, &b| tr.p[a][0].total_cmp(&tr.p[b][0])).unwrap();
        assert!(top > 0 && top + 1 < xs.len());
        assert_eq!(tr.sheets(top - 1)[0], -1);
        assert_eq!(tr.sheets(top + 1)[0], 1);
        // |P_x| ~ C √(2 - P) near the edge
        let i = top.saturating_sub(3);
        let ratio = tr.px[i][0].abs() / (2.0 - tr.p[i][0]).sqrt();
        let expected = 2.0 * 2.0 * ((2.0f64 - 0.5) * (2.0 - 1.0)).sqrt();
        assert!((ratio - expected).abs() / expected < 1e-2, "{ratio} vs {expected}");
    }

    #[test]
    fn genus_one_trace_gives_unit_potential() {
        let curve = curve1();
        let grid = Grid::line(-10.0, 10.0, 2001);
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, 0.0, &grid.points(), &ode()).unwrap();
        let (q, y) = trace_formulas(&curve, &tr, &grid, 0.1).unwrap();
        for i in 10..grid.n - 10 {
            assert!((q[i] - 1.0).abs() < 1e-7, "{} at {}", q[i], grid.x(i));
            assert!((y[i] - tr.p[i][0].powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn schrodinger_normalization_gives_unit_density() {
        let curve = curve1();
        let grid = Grid::line(-5.0, 5.0, 1001);
        let tr = pole_motion_x(&curve, &M0Spec::Schrodinger, &PoleConfiguration { positions: vec![1.2], sheets: vec![1] }, 0.0, &grid.points(), &ode()).unwrap();
        let (_, y) = trace_formulas(&curve, &tr, &grid, 0.1).unwrap();
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-13));
        for i in 0..grid.n {
            let expected = -2.0 * tr.w[i][0];
            assert!((tr.px[i][0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn genus_one_weyl_functions_match_riccati() {
        let curve = curve1();
        let grid = Grid::line(-40.0, 40.0, 8001);
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, 0.0, &grid.points(), &ode()).unwrap();
        let (q, y) = trace_formulas(&curve, &tr, &grid, 0.1).unwrap();
        let pair = PotentialPair::new(Func::from_samples(&grid, &q).unwrap(), Func::from_samples(&grid, &y).unwrap(), 0.1);
        let nodes: Vec<f64> = (0..=20).map(|i| -5.0 + 0.5 * i as f64).collect();
        let idx: Vec<usize> = nodes.iter().map(|x| ((x + 40.0) / grid.h()).round() as usize).collect();
        let opts = RiccatiOptions { margin: 30.0, check_tail: false, ..Default::default() };
        for lam in [c(0.0, 0.0), c(0.3, 1.0), c(1.5, 0.5), c(3.0, -2.0)] {
            let (mp, mm) = weyl_from_poles(&curve, &tr, lam).unwrap();
            let rp = riccati_m(&pair, &nodes, lam, Side::Plus, &opts).unwrap();
            let rm = riccati_m(&pair, &nodes, lam, Side::Minus, &opts).unwrap();
            for (n, &i) in idx.iter().enumerate() {
                assert!((mp[i] - rp[n]).norm() < 1e-6 * (1.0 + rp[n].norm()), "λ={lam} x={}: {} vs {}", nodes[n], mp[i], rp[n]);
                assert!((mm[i] - rm[n]).norm() < 1e-6 * (1.0 + rm[n].norm()));
            }
        }
    }

    #[test]
    fn poles_of_the_weyl_functions() {
        let curve = curve1();
        let xs = [0.0, 0.37];
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, 0.0, &xs, &ode()).unwrap();
        let p = tr.p[1][0];
        let growth = |e: f64| {
            let (mp, mm) = weyl_from_poles(&curve, &tr, c(p, e)).unwrap();
            mp[1].norm().max(mm[1].norm())
        };
        let slope = (growth(1e-4) / growth(1e-6)).log10() / -2.0;
        assert!((slope - 1.0).abs() < 1e-3, "{slope}");
    }

    #[test]
    fn herglotz_sign() {
        let curve = curve1();
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.3], sheets: vec![-1] }, 0.0, &[0.0, 0.5, 1.0], &ode()).unwrap();
        for (re, im) in [(0.1, 0.2), (-3.0, 1.0), (1.5, 0.01), (5.0, 3.0), (1.0, 10.0)] {
            let (mp, mm) = weyl_from_poles(&curve, &tr, c(re, im)).unwrap();
            for i in 0..3 {
                assert!(mp[i].im > 0.0 && mm[i].im < 0.0);
            }
        }
    }

    #[test]
    fn u_relation_reproduces_ch_velocity() {
        // with ℳ₀ ≡ 2 the relation integrates to u = c - 1/P
        let curve = curve1();
        let grid = Grid::line(0.0, 6.0, 601);
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, 0.0, &grid.points(), &ode()).unwrap();
        let cc = 0.4;
        let u = u_by_quadrature(&curve, &M0Spec::constant(2.0), &tr, 1, &[1.0, cc - 1.0 / 1.5], 0.0, &ode()).unwrap();
        for i in 0..grid.n {
            assert!((u[i][0] - 1.0).abs() < 1e-12);
            assert!((u[i][1] - (cc - 1.0 / tr.p[i][0])).abs() < 1e-9);
        }
    }

    #[test]
    fn synthetic_division_matches_direct_expansion() {
        // k = 0, U = u0 + u1 λ + u2 λ², one pole
        let u = [0.3, -1.2, 0.5];
        let (p, px) = (1.7, 0.9);
        let got = u_x_relation(&u, 0, &[p], &[px], 2.0, 0.0, 0.0);
        // [U(P) - U(λ)]/(λ - P) = -(u1 + u2(λ + P)), times λP_x/P
        let s = px / p;
        let expect = [0.0, -(u[1] + u[2] * p) * s, -u[2] * s];
        for m in 0..3 {
            assert!((got[m] - expect[m]).abs() < 1e-14);
        }
    }

    #[test]
    fn ch_traveling_wave_and_mixed_partials() {
        let curve = curve1();
        let omega0 = 1.5;
        let period = genus_one_period(&curve, 2.0).unwrap();
        let grid = Grid::periodic(0.0, period, 128);
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, 0.0, &grid.points(), &ode()).unwrap();
        let run = pole_motion_t(&curve, &M0Spec::constant(2.0), &grid, &tr, 1, ch_u_from_trace(&curve, &grid, omega0), 1e-3, 200, 100).unwrap();
        assert!(run.mixed_residual < 1e-6, "{}", run.mixed_residual);
        let speed = (3.5 - omega0) / 2.0;
        let t = run.t[run.t.len() - 1];
        let shifted = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, -speed * t, &grid.points(), &ode()).unwrap();
        let last = &run.frames[run.frames.len() - 1];
        for i in 0..grid.n {
            assert!((last.p[i][0] - shifted.p[i][0]).abs() < 1e-6);
        }
        // the same density from the CH solver
        let (_, y0) = trace_formulas(&curve, &tr, &grid, 0.1).unwrap();
        let (_, y1) = trace_formulas(&curve, last, &grid, 0.1).unwrap();
        let mut st = crate::evolve::FlowState::ch(grid.clone(), y0, omega0, 0.1).unwrap();
        st.advance(1e-3, 200).unwrap();
        assert!(crate::grid::max_abs_diff(&st.y, &y1) < 1e-3);
    }

    #[test]
    fn frozen_poles_without_u() {
        let curve = curve1();
        let grid = Grid::periodic(0.0, genus_one_period(&curve, 2.0).unwrap(), 64);
        let tr = pole_motion_x(&curve, &M0Spec::constant(2.0), &PoleConfiguration { positions: vec![1.5], sheets: vec![1] }, 0.0, &grid.points(), &ode()).unwrap();
        let zero = |_: f64, _: &PoleTrajectory| Ok(vec![vec![0.0; 64]]);
        let run = pole_motion_t(&curve, &M0Spec::constant(2.0), &grid, &tr, 0, zero, 1e-2, 10, 5).unwrap();
        for i in 0..64 {
            assert!((run.frames[2].p[i][0] - tr.p[i][0]).abs() < 1e-14);
        }
    }

    #[test]
    fn collision_is_reported() {
        let curve = SpectralCurve::new(vec![0.5, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = speed_factors(&curve, 2.0, &[2.0, 2.0], 0.0);
        assert!(matches!(r, Err(Error::Collision { .. })));
    }

    #[test]
    fn log_space_products_agree() {
        let v = [1.5, -2.0, 0.25, 3.0, -0.5];
        assert!((product(v.iter().copied(), 5) - v.iter().product::<f64>()).abs() < 1e-14);
    }
}
