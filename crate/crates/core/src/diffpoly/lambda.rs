//! Polynomials in the spectral parameter with differential-polynomial
//! coefficients, and 2×2 matrices of them.

use std::ops::{Add, Mul, Sub};

use super::{DiffPoly, Generator, Rational};
use crate::error::Result;

/// `Σ c_j λ^j`, trailing zero coefficients trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LambdaPoly {
    coeffs: Vec<DiffPoly>,
}

impl LambdaPoly {
    pub fn new(mut coeffs: Vec<DiffPoly>) -> Self {
        while coeffs.last().is_some_and(DiffPoly::is_zero) {
            coeffs.pop();
        }
        LambdaPoly { coeffs }
    }

    pub fn zero() -> Self {
        LambdaPoly { coeffs: Vec::new() }
    }

    pub fn constant(p: DiffPoly) -> Self {
        Self::new(vec![p])
    }

    /// `λ`.
    pub fn lambda() -> Self {
        Self::monomial(DiffPoly::one(), 1)
    }

    /// `p λ^n`.
    pub fn monomial(p: DiffPoly, n: usize) -> Self {
        let mut c = vec![DiffPoly::zero(); n];
        c.push(p);
        Self::new(c)
    }

    /// `U = Σ u_j λ^j` from generators `u0..ur`.
    pub fn from_generators(gens: &[Generator]) -> Self {
        Self::new(gens.iter().map(Generator::poly).collect())
    }

    pub fn coeffs(&self) -> &[DiffPoly] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> DiffPoly {
        self.coeffs.get(j).cloned().unwrap_or_default()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn map<F: FnMut(&DiffPoly) -> DiffPoly>(&self, f: F) -> Self {
        Self::new(self.coeffs.iter().map(f).collect())
    }

    pub fn try_map<F: FnMut(&DiffPoly) -> Result<DiffPoly>>(&self, f: F) -> Result<Self> {
        Ok(Self::new(self.coeffs.iter().map(f).collect::<Result<_>>()?))
    }

    pub fn dx(&self) -> Self {
        self.map(DiffPoly::dx)
    }

    pub fn dt(&self) -> Result<Self> {
        self.try_map(DiffPoly::dt)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|p| p.scale(c))
    }

    pub fn mul_poly(&self, p: &DiffPoly) -> Self {
        self.map(|c| c * p)
    }

    /// Multiplies by `λ^n`.
    pub fn shift(&self, n: usize) -> Self {
        let mut c = vec![DiffPoly::zero(); n];
        c.extend(self.coeffs.iter().cloned());
        Self::new(c)
    }

    pub fn eval<T, F>(&self, lambda: T, mut coeff: F) -> T
    where
        T: Copy + Mul<Output = T> + Add<Output = T>,
        F: FnMut(&DiffPoly) -> T,
    {
        let mut it = self.coeffs.iter().rev();
        let Some(top) = it.next() else { return lambda * coeff(&DiffPoly::zero()) };
        let mut acc = coeff(top);
        for c in it {
            acc = acc * lambda + coeff(c);
        }
        acc
    }
}

impl Add for &LambdaPoly {
    type Output = LambdaPoly;
    fn add(self, rhs: &LambdaPoly) -> LambdaPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        LambdaPoly::new((0..n).map(|j| &self.coeff(j) + &rhs.coeff(j)).collect())
    }
}

impl Sub for &LambdaPoly {
    type Output = LambdaPoly;
    fn sub(self, rhs: &LambdaPoly) -> LambdaPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        LambdaPoly::new((0..n).map(|j| &self.coeff(j) - &rhs.coeff(j)).collect())
    }
}

impl Mul for &LambdaPoly {
    type Output = LambdaPoly;
    fn mul(self, rhs: &LambdaPoly) -> LambdaPoly {
        if self.is_zero() || rhs.is_zero() {
            return LambdaPoly::zero();
        }
        let mut c = vec![DiffPoly::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        LambdaPoly::new(c)
    }
}

/// `[[a, b], [c, d]]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LambdaMatrix(pub [[LambdaPoly; 2]; 2]);

impl LambdaMatrix {
    pub fn new(a: LambdaPoly, b: LambdaPoly, c: LambdaPoly, d: LambdaPoly) -> Self {
        LambdaMatrix([[a, b], [c, d]])
    }

    pub fn entry(&self, i: usize, j: usize) -> &LambdaPoly {
        &self.0[i][j]
    }

    pub fn map<F: FnMut(&LambdaPoly) -> LambdaPoly>(&self, mut f: F) -> Self {
        let m = &self.0;
        LambdaMatrix([[f(&m[0][0]), f(&m[0][1])], [f(&m[1][0]), f(&m[1][1])]])
    }

    pub fn try_map<F: FnMut(&LambdaPoly) -> Result<LambdaPoly>>(&self, mut f: F) -> Result<Self> {
        let m = &self.0;
        Ok(LambdaMatrix([[f(&m[0][0])?, f(&m[0][1])?], [f(&m[1][0])?, f(&m[1][1])?]]))
    }

    pub fn dx(&self) -> Self {
        self.map(LambdaPoly::dx)
    }

    pub fn dt(&self) -> Result<Self> {
        self.try_map(LambdaPoly::dt)
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &LambdaMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(LambdaPoly::is_zero)
    }
}

impl Mul for &LambdaMatrix {
    type Output = LambdaMatrix;
    fn mul(self, rhs: &LambdaMatrix) -> LambdaMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let e = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        LambdaMatrix([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

impl Add for &LambdaMatrix {
    type Output = LambdaMatrix;
    fn add(self, rhs: &LambdaMatrix) -> LambdaMatrix {
        let (a, b) = (&self.0, &rhs.0);
        LambdaMatrix([[&a[0][0] + &b[0][0], &a[0][1] + &b[0][1]], [&a[1][0] + &b[1][0], &a[1][1] + &b[1][1]]])
    }
}

impl Sub for &LambdaMatrix {
    type Output = LambdaMatrix;
    fn sub(self, rhs: &LambdaMatrix) -> LambdaMatrix {
        let (a, b) = (&self.0, &rhs.0);
        LambdaMatrix([[&a[0][0] - &b[0][0], &a[0][1] - &b[0][1]], [&a[1][0] - &b[1][0], &a[1][1] - &b[1][1]]])
    }
}
