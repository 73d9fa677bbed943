//! Differential polynomials times an integer power of one generator.
//!
//! Enough to handle expressions such as `s_xx / s` or `y^{-1/2} = s^2` with
//! `y = s^{-4}` while the underlying ring stays polynomial.

use std::ops::{Add, Mul, Sub};

use num_traits::One;

use super::{DiffPoly, Generator, Rational};

/// `num · base^pow`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laurent {
    pub num: DiffPoly,
    pub base: Generator,
    pub pow: i32,
}

impl Laurent {
    pub fn new(num: DiffPoly, base: &Generator, pow: i32) -> Self {
        Laurent { num, base: base.clone(), pow }
    }

    pub fn poly(num: DiffPoly, base: &Generator) -> Self {
        Self::new(num, base, 0)
    }

    /// `base^pow`.
    pub fn power(base: &Generator, pow: i32) -> Self {
        Self::new(DiffPoly::one(), base, pow)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Rewrites with a smaller exponent: `num·b^p = (num·b^(p-q))·b^q`.
    fn lowered(&self, pow: i32) -> DiffPoly {
        debug_assert!(pow <= self.pow);
        &self.num * &self.base.poly().pow((self.pow - pow) as u32)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.num.scale(c), &self.base, self.pow)
    }

    /// `(n b^p)_x = (n_x b + p n b_x) b^(p-1)`.
    pub fn dx(&self) -> Self {
        let p = Rational::from_integer(self.pow.into());
        let num = &(&self.num.dx() * &self.base.poly()) + &(&self.num * &self.base.deriv(1)).scale(&p);
        Self::new(num, &self.base, self.pow - 1)
    }

    pub fn dx_n(&self, n: u32) -> Self {
        (0..n).fold(self.clone(), |acc, _| acc.dx())
    }
}

impl Add for &Laurent {
    type Output = Laurent;
    fn add(self, rhs: &Laurent) -> Laurent {
        assert_eq!(self.base, rhs.base, "Laurent bases differ");
        let p = self.pow.min(rhs.pow);
        Laurent::new(&self.lowered(p) + &rhs.lowered(p), &self.base, p)
    }
}

impl Sub for &Laurent {
    type Output = Laurent;
    fn sub(self, rhs: &Laurent) -> Laurent {
        self + &rhs.scale(&-Rational::one())
    }
}

impl Mul for &Laurent {
    type Output = Laurent;
    fn mul(self, rhs: &Laurent) -> Laurent {
        assert_eq!(self.base, rhs.base, "Laurent bases differ");
        Laurent::new(&self.num * &rhs.num, &self.base, self.pow + rhs.pow)
    }
}
