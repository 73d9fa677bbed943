//! Potential pairs `a = (q, y)` with `y ≥ δ > 0`.
//!
//! Profiles are closed-form expressions from a small whitelist or sampled
//! data; both can be evaluated with derivatives at arbitrary `x`, which the
//! adaptive integrators need.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fornberg_weights, Grid, Spectral};
use crate::jet::Jet;

/// Whitelisted closed-form profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expr {
    Const {
        value: f64,
    },
    /// `amp · sech²(kappa (x - center))`
    Sech2 {
        amp: f64,
        kappa: f64,
        #[serde(default)]
        center: f64,
    },
    /// `amp · exp(-((x - center)/width)²)`
    GaussBump {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `amp · sin(freq x + phase)`
    Sin {
        amp: f64,
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amp/2 · [tanh((x - center + half_width)/edge) - tanh((x - center - half_width)/edge)]`
    SmoothBox {
        amp: f64,
        half_width: f64,
        edge: f64,
        #[serde(default)]
        center: f64,
    },
    Sum {
        terms: Vec<Expr>,
    },
    Scale {
        factor: f64,
        expr: Box<Expr>,
    },
    /// `q̃(y) + (lambda0 + v) y`, the canonical potential of `y` shifted by
    /// `lambda0` and perturbed by `v`. Only meaningful as a `q` profile.
    TildePlus {
        y: Box<Expr>,
        lambda0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Box<Expr>>,
    },
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const { value }
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        Expr::Sum { terms }
    }

    /// Jet at `x`; `TildePlus` loses two orders.
    pub fn jet(&self, x: f64) -> Jet {
        let v = Jet::variable(x);
        match self {
            Expr::Const { value } => Jet::constant(*value),
            Expr::Sech2 { amp, kappa, center } => {
                let t = ((v + (-center)) * *kappa).tanh();
                (Jet::constant(1.0) - t * t) * *amp
            }
            Expr::GaussBump { amp, width, center } => {
                let s = (v + (-center)) * (1.0 / width);
                (-(s * s)).exp() * *amp
            }
            Expr::Sin { amp, freq, phase } => ((v * *freq) + *phase).sin_cos().0 * *amp,
            Expr::SmoothBox { amp, half_width, edge, center } => {
                let s = v + (-center);
                let a = ((s + *half_width) * (1.0 / edge)).tanh();
                let b = ((s + (-half_width)) * (1.0 / edge)).tanh();
                (a - b) * (0.5 * amp)
            }
            Expr::Sum { terms } => terms.iter().fold(Jet::constant(0.0), |acc, t| acc + t.jet(x)),
            Expr::Scale { factor, expr } => expr.jet(x) * *factor,
            Expr::TildePlus { y, lambda0, v } => {
                let yj = y.jet(x);
                let extra = v.as_ref().map(|e| e.jet(x)).unwrap_or(Jet::constant(0.0));
                tilde_q_jet(&yj) + (extra + *lambda0) * yj
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x).value()
    }
}

/// `q̃ = -(y_x/(4y))_x + (y_x/(4y))²` from a jet of `y`.
pub fn tilde_q_jet(y: &Jet) -> Jet {
    let p = (y.differentiate() / *y) * 0.25;
    p * p - p.differentiate()
}

/// Trigonometric interpolant of samples on a periodic grid.
#[derive(Clone, Debug)]
pub struct PeriodicSamples {
    a: f64,
    length: f64,
    coeffs: Vec<Complex64>,
}

impl PeriodicSamples {
    pub fn new(grid: &Grid, values: &[f64]) -> Result<Self> {
        grid.check_len(values)?;
        if !grid.periodic {
            return Err(Error::InvalidArgument("periodic samples need a periodic grid".into()));
        }
        let sp = Spectral::new(grid.n, grid.length());
        let n = grid.n as f64;
        let coeffs = sp.fft(values).into_iter().map(|c| c / n).collect();
        Ok(PeriodicSamples { a: grid.a, length: grid.length(), coeffs })
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let base = Complex64::from_polar(1.0, 2.0 * PI / self.length * (x - self.a));
        let mut ph = base;
        let mut s = self.coeffs[0].re;
        for m in 1..=n / 2 {
            let c = if n % 2 == 0 && m == n / 2 {
                (self.coeffs[m] * ph).re
            } else {
                2.0 * (self.coeffs[m] * ph).re
            };
            s += c;
            ph *= base;
        }
        s
    }

    /// Value and first four derivatives.
    pub fn jet(&self, x: f64) -> Jet {
        let n = self.coeffs.len();
        let w = 2.0 * PI / self.length;
        let base = Complex64::from_polar(1.0, w * (x - self.a));
        let mut out = [0.0; 5];
        let mut ph = Complex64::new(1.0, 0.0);
        let mut add = |c: Complex64, k: f64, e: Complex64| {
            let mut d = c * e;
            for o in out.iter_mut() {
                *o += d.re;
                d *= Complex64::new(0.0, k);
            }
        };
        for m in 0..=n / 2 {
            let k = w * m as f64;
            if m == 0 {
                add(self.coeffs[0], 0.0, ph);
            } else if n % 2 == 0 && m == n / 2 {
                // split the Nyquist mode so the interpolant stays real
                add(self.coeffs[m] * 0.5, k, ph);
                add(self.coeffs[m] * 0.5, -k, ph.conj());
            } else {
                add(self.coeffs[m], k, ph);
                add(self.coeffs[n - m], -k, ph.conj());
            }
            ph *= base;
        }
        let mut j = [0.0; crate::jet::ORDER + 1];
        let mut fact = 1.0;
        for (k, v) in out.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            j[k] = v / fact;
        }
        Jet(j)
    }
}

/// Local polynomial interpolant of samples on a line grid.
#[derive(Clone, Debug)]
pub struct LineSamples {
    a: f64,
    h: f64,
    values: Vec<f64>,
}

const LINE_STENCIL: usize = 8;

impl LineSamples {
    pub fn new(grid: &Grid, values: &[f64]) -> Result<Self> {
        grid.check_len(values)?;
        if grid.periodic || grid.n < LINE_STENCIL {
            return Err(Error::InvalidArgument("line samples need a line grid with at least 8 points".into()));
        }
        Ok(LineSamples { a: grid.a, h: grid.h(), values: values.to_vec() })
    }

    /// Value and first four derivatives from the nearest eight samples.
    pub fn jet(&self, x: f64) -> Jet {
        let n = self.values.len();
        let s = (x - self.a) / self.h;
        let start = (s.floor() as i64 - (LINE_STENCIL as i64 / 2 - 1)).clamp(0, (n - LINE_STENCIL) as i64) as usize;
        let xs: Vec<f64> = (start..start + LINE_STENCIL).map(|i| self.a + i as f64 * self.h).collect();
        let w = fornberg_weights(x, &xs, 4);
        let mut j = [0.0; crate::jet::ORDER + 1];
        let mut fact = 1.0;
        for (m, row) in w.iter().enumerate() {
            if m > 0 {
                fact *= m as f64;
            }
            let d: f64 = row.iter().zip(&self.values[start..start + LINE_STENCIL]).map(|(a, b)| a * b).sum();
            j[m] = d / fact;
        }
        Jet(j)
    }
}

#[derive(Clone, Debug)]
pub enum Func {
    Expr(Expr),
    Periodic(PeriodicSamples),
    Line(LineSamples),
}

impl Func {
    pub fn from_samples(grid: &Grid, values: &[f64]) -> Result<Self> {
        if grid.periodic {
            Ok(Func::Periodic(PeriodicSamples::new(grid, values)?))
        } else {
            Ok(Func::Line(LineSamples::new(grid, values)?))
        }
    }

    pub fn jet(&self, x: f64) -> Jet {
        match self {
            Func::Expr(e) => e.jet(x),
            Func::Periodic(p) => p.jet(x),
            Func::Line(l) => l.jet(x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Func::Periodic(p) => p.value(x),
            _ => self.jet(x).value(),
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        match self {
            Func::Periodic(_) | Func::Line(_) => grid.sample(|x| self.eval(x)),
            Func::Expr(e) => grid.sample(|x| e.eval(x)),
        }
    }
}

impl From<Expr> for Func {
    fn from(e: Expr) -> Self {
        Func::Expr(e)
    }
}

/// An element `(q, y)` of the phase space with its lower bound `δ` on `y`.
#[derive(Clone, Debug)]
pub struct PotentialPair {
    pub q: Func,
    pub y: Func,
    pub delta: f64,
    pub lambda0: Option<f64>,
}

/// Pointwise data needed by the integrators.
#[derive(Clone, Copy, Debug)]
pub struct PairPoint {
    pub q: f64,
    pub y: f64,
    pub y_x: f64,
    pub y_xx: f64,
}

impl PairPoint {
    pub fn tilde_q(&self) -> f64 {
        crate::hierarchy::tilde_q_point(self.y, self.y_x, self.y_xx)
    }
}

impl PotentialPair {
    pub fn new(q: impl Into<Func>, y: impl Into<Func>, delta: f64) -> Self {
        PotentialPair { q: q.into(), y: y.into(), delta, lambda0: None }
    }

    pub fn with_lambda0(mut self, l: f64) -> Self {
        self.lambda0 = Some(l);
        self
    }

    /// `(q̃ + λ0 y, y)` for a closed-form density.
    pub fn stationary(y: Expr, lambda0: f64, delta: f64) -> Self {
        let q = Expr::TildePlus { y: Box::new(y.clone()), lambda0, v: None };
        PotentialPair::new(q, y, delta).with_lambda0(lambda0)
    }

    pub fn point(&self, x: f64) -> PairPoint {
        let yj = self.y.jet(x);
        PairPoint { q: self.q.eval(x), y: yj.value(), y_x: yj.deriv(1), y_xx: yj.deriv(2) }
    }

    /// Rejects samples where `y < δ`.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        for i in 0..grid.n {
            let x = grid.x(i);
            let y = self.y.eval(x);
            if !(y >= self.delta) {
                return Err(Error::Domain(format!("density y({x}) = {y} is below delta = {}", self.delta)));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
        (self.q.sample(grid), self.y.sample(grid))
    }

    /// `V = (q - q̃)/y - λ0`.
    pub fn v(&self, x: f64, lambda0: f64) -> f64 {
        let p = self.point(x);
        (p.q - p.tilde_q()) / p.y - lambda0
    }
}

/// A profile in a pair file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FuncSpec {
    Expr { expr: Expr },
    Samples { values: Vec<f64> },
}

impl FuncSpec {
    pub fn to_func(&self, grid: Option<&Grid>) -> Result<Func> {
        match self {
            FuncSpec::Expr { expr } => Ok(Func::Expr(expr.clone())),
            FuncSpec::Samples { values } => {
                let g = grid.ok_or_else(|| Error::InvalidArgument("sampled profiles need a grid".into()))?;
                Func::from_samples(g, values)
            }
        }
    }
}

/// JSON document `{q, y, delta, lambda0?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub q: FuncSpec,
    pub y: FuncSpec,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
}

impl PairFile {
    pub fn parse(s: &str) -> Result<Self> {
        let f: PairFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if !(f.delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", f.delta)));
        }
        Ok(f)
    }

    pub fn to_pair(&self, grid: Option<&Grid>) -> Result<PotentialPair> {
        Ok(PotentialPair {
            q: self.q.to_func(grid)?,
            y: self.y.to_func(grid)?,
            delta: self.delta,
            lambda0: self.lambda0,
        })
    }
}
