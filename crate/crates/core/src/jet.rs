//! Truncated Taylor series in one variable, used to differentiate the
//! closed-form profiles exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried.
pub const ORDER: usize = 8;

/// Normalized Taylor coefficients `c_k = f^(k)(x)/k!`, `k = 0..=ORDER`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; ORDER + 1]);

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; ORDER + 1];
        a[0] = c;
        Jet(a)
    }

    /// The identity function at `x`.
    pub fn variable(x: f64) -> Self {
        let mut a = [0.0; ORDER + 1];
        a[0] = x;
        a[1] = 1.0;
        Jet(a)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `f^(n)(x)`.
    pub fn deriv(&self, n: usize) -> f64 {
        assert!(n <= ORDER, "derivative order {n} exceeds jet order {ORDER}");
        self.0[n] * (1..=n).map(|k| k as f64).product::<f64>()
    }

    /// Jet of `f'`; the top coefficient is lost.
    pub fn differentiate(&self) -> Self {
        let mut a = [0.0; ORDER + 1];
        for k in 0..ORDER {
            a[k] = (k + 1) as f64 * self.0[k + 1];
        }
        Jet(a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet(self.0.map(|c| c * s))
    }

    pub fn recip(&self) -> Self {
        let a = &self.0;
        let mut b = [0.0; ORDER + 1];
        b[0] = 1.0 / a[0];
        for k in 1..=ORDER {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Jet(b)
    }

    pub fn exp(&self) -> Self {
        let a = &self.0;
        let mut e = [0.0; ORDER + 1];
        e[0] = a[0].exp();
        for k in 1..=ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    /// `(sin f, cos f)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let a = &self.0;
        let mut s = [0.0; ORDER + 1];
        let mut c = [0.0; ORDER + 1];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..=ORDER {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc += j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Jet(s), Jet(c))
    }

    pub fn tanh(&self) -> Self {
        let a = &self.0;
        let mut t = [0.0; ORDER + 1];
        // w = 1 - t²
        let mut w = [0.0; ORDER + 1];
        t[0] = a[0].tanh();
        w[0] = 1.0 - t[0] * t[0];
        for k in 1..=ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * w[k - j]).sum();
            t[k] = s / k as f64;
            let tt: f64 = (0..=k).map(|j| t[j] * t[k - j]).sum();
            w[k] = -tt;
        }
        Jet(t)
    }

    pub fn sqrt(&self) -> Self {
        let a = &self.0;
        let mut s = [0.0; ORDER + 1];
        s[0] = a[0].sqrt();
        for k in 1..=ORDER {
            let c: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (a[k] - c) / (2.0 * s[0]);
        }
        Jet(s)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut r = Jet::constant(1.0);
        for _ in 0..n {
            r = r * *self;
        }
        r
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut a = self.0;
        for (x, y) in a.iter_mut().zip(o.0) {
            *x += y;
        }
        Jet(a)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER + 1];
        for k in 0..=ORDER {
            c[k] = (0..=k).map(|j| self.0[j] * o.0[k - j]).sum();
        }
        Jet(c)
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.0[0] += c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}
