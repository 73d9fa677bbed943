//! Explicit Runge–Kutta integrators for real first-order systems.
//!
//! Complex systems are packed as interleaved `(re, im)` pairs.

use crate::error::{Error, Result};

/// Adaptive Dormand–Prince 5(4) with standard step control.
#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-11, atol: 1e-13, h_init: 1e-3, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

impl Dopri5 {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Dopri5 { rtol, atol, ..Default::default() }
    }

    /// Integrates `u' = f(x, u)` from `x0` through the monotone sequence
    /// `xs` (either direction) and returns the state at each `xs[i]`.
    pub fn integrate<F>(&self, f: F, x0: f64, u0: &[f64], xs: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = Vec::with_capacity(xs.len());
        self.integrate_with(f, x0, u0, xs, |_, u| {
            out.push(u.to_vec());
            None
        })?;
        Ok(out)
    }

    /// As [`Dopri5::integrate`], calling `at_node(i, u)` at each output
    /// node. The callback may return a replacement state (used for
    /// renormalization).
    pub fn integrate_with<F, G>(&self, mut f: F, x0: f64, u0: &[f64], xs: &[f64], mut at_node: G) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        G: FnMut(usize, &[f64]) -> Option<Vec<f64>>,
    {
        let n = u0.len();
        let mut u = u0.to_vec();
        let mut x = x0;
        let mut h = self.h_init;
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut unew = vec![0.0; n];
        let mut steps = 0usize;
        for (i, &target) in xs.iter().enumerate() {
            let dir = if target >= x { 1.0 } else { -1.0 };
            f(x, &u, &mut k[0]);
            while (target - x) * dir > 1e-14 * (1.0 + x.abs()) {
                let mut hs = h.min((target - x).abs()) * dir;
                loop {
                    steps += 1;
                    if steps > self.max_steps {
                        return Err(Error::Integration(format!("step budget exhausted near x={x}")));
                    }
                    for s in 1..7 {
                        for j in 0..n {
                            let mut acc = u[j];
                            for (l, a) in A[s].iter().enumerate().take(s) {
                                acc += hs * a * k[l][j];
                            }
                            tmp[j] = acc;
                        }
                        f(x + C[s] * hs, &tmp, &mut k[s]);
                    }
                    let mut err: f64 = 0.0;
                    for j in 0..n {
                        let mut s5 = 0.0;
                        let mut s4 = 0.0;
                        for s in 0..7 {
                            s5 += B5[s] * k[s][j];
                            s4 += B4[s] * k[s][j];
                        }
                        unew[j] = u[j] + hs * s5;
                        let sc = self.atol + self.rtol * u[j].abs().max(unew[j].abs());
                        err = err.max((hs * (s5 - s4) / sc).abs());
                    }
                    if !err.is_finite() {
                        return Err(Error::BlowUp { x });
                    }
                    if err <= 1.0 {
                        x += hs;
                        u.copy_from_slice(&unew);
                        k.swap(0, 6);
                        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        h = (hs.abs() * fac).max(self.h_min);
                        break;
                    }
                    let fac = (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                    hs *= fac;
                    if hs.abs() < self.h_min {
                        return Err(Error::Integration(format!("step size underflow near x={x}")));
                    }
                }
            }
            x = target;
            if let Some(r) = at_node(i, &u) {
                u = r;
            }
        }
        Ok(())
    }
}

/// One classical RK4 step.
pub fn rk4_step<F>(f: &mut F, x: f64, u: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = u.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut t = vec![0.0; n];
    f(x, u, &mut k1);
    for j in 0..n {
        t[j] = u[j] + 0.5 * h * k1[j];
    }
    f(x + 0.5 * h, &t, &mut k2);
    for j in 0..n {
        t[j] = u[j] + 0.5 * h * k2[j];
    }
    f(x + 0.5 * h, &t, &mut k3);
    for j in 0..n {
        t[j] = u[j] + h * k3[j];
    }
    f(x + h, &t, &mut k4);
    (0..n).map(|j| u[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).collect()
}
