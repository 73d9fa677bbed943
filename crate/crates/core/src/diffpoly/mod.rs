//! Exact differential polynomials.
//!
//! A [`DiffPoly`] is a finite sum of rational multiples of products of
//! *factors*; a factor is a generator function of `x` carrying an
//! `x`-derivative order and a `t`-derivative order of at most one.
//! Designated constants are generators whose derivatives all vanish.
//!
//! The normal form is a sorted map from [`Monomial`] to nonzero coefficient,
//! so structural equality is mathematical equality.

mod integrate;
mod lambda;
mod laurent;
mod render;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use integrate::formal_integrate;
pub use lambda::{LambdaMatrix, LambdaPoly};
pub use laurent::Laurent;
pub use render::{DiffPolyJson, FactorJson, MonomialJson};

pub type Rational = BigRational;

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    Function,
    Constant,
}

/// A named generator. Ordering is by name, then kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    name: Arc<str>,
    kind: GeneratorKind,
}

impl Generator {
    pub fn function(name: &str) -> Self {
        Generator { name: Arc::from(name), kind: GeneratorKind::Function }
    }

    pub fn constant(name: &str) -> Self {
        Generator { name: Arc::from(name), kind: GeneratorKind::Constant }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn is_constant(&self) -> bool {
        self.kind == GeneratorKind::Constant
    }

    /// The generator itself as a polynomial.
    pub fn poly(&self) -> DiffPoly {
        self.deriv(0)
    }

    /// `d^n/dx^n` of the generator.
    pub fn deriv(&self, x_order: u32) -> DiffPoly {
        DiffPoly::from_factor(Factor { generator: self.clone(), t_order: 0, x_order })
    }

    /// `d/dt d^n/dx^n` of the generator.
    pub fn dt(&self, x_order: u32) -> DiffPoly {
        DiffPoly::from_factor(Factor { generator: self.clone(), t_order: 1, x_order })
    }
}

/// One generator with its derivative orders. Sorted by (generator, t, x).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    pub generator: Generator,
    pub t_order: u8,
    pub x_order: u32,
}

impl Factor {
    pub fn new(generator: Generator, x_order: u32, t_order: u8) -> Self {
        Factor { generator, t_order, x_order }
    }

    /// A derivative of a designated constant, which is identically zero.
    fn vanishes(&self) -> bool {
        self.generator.is_constant() && (self.x_order > 0 || self.t_order > 0)
    }

    fn dx(&self) -> Factor {
        Factor { x_order: self.x_order + 1, ..self.clone() }
    }
}

/// A product of factors with positive exponents, sorted and merged.
/// The empty monomial is `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(Factor, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    /// Builds a monomial from an unsorted multiset of factors. Returns `None`
    /// when some factor is a derivative of a constant.
    pub fn from_factors<I: IntoIterator<Item = Factor>>(factors: I) -> Option<Self> {
        let mut counts: BTreeMap<Factor, u32> = BTreeMap::new();
        for f in factors {
            if f.vanishes() {
                return None;
            }
            *counts.entry(f).or_insert(0) += 1;
        }
        Some(Monomial(counts.into_iter().collect()))
    }

    pub fn factors(&self) -> &[(Factor, u32)] {
        &self.0
    }

    /// Factors with multiplicity.
    pub fn flat(&self) -> impl Iterator<Item = &Factor> + '_ {
        self.0.iter().flat_map(|(f, e)| std::iter::repeat_n(f, *e as usize))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    /// Sum over factors of `x_order + 1`; `d/dx` raises it by one.
    pub fn weight(&self) -> u32 {
        self.0.iter().map(|(f, e)| e * (f.x_order + 1)).sum()
    }

    pub fn total_x_order(&self) -> u32 {
        self.0.iter().map(|(f, e)| e * f.x_order).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(Factor, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Removes one copy of the factor at `idx` and returns the remainder.
    fn without_one(&self, idx: usize) -> Monomial {
        let mut v = self.0.clone();
        if v[idx].1 == 1 {
            v.remove(idx);
        } else {
            v[idx].1 -= 1;
        }
        Monomial(v)
    }

    fn mentions(&self, g: &Generator) -> bool {
        self.0.iter().any(|(f, _)| &f.generator == g)
    }
}

/// A single term: coefficient and a flat multiset of factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffMonomial {
    pub coefficient: Rational,
    pub factors: Vec<Factor>,
}

/// Canonical form of a raw monomial list.
pub fn normalize(raw: Vec<DiffMonomial>) -> DiffPoly {
    let mut p = DiffPoly::zero();
    for m in raw {
        if let Some(mono) = Monomial::from_factors(m.factors) {
            p.add_term(mono, m.coefficient);
        }
    }
    p
}

/// A differential polynomial in normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiffPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        DiffPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rat(n, 1))
    }

    pub fn from_factor(f: Factor) -> Self {
        match Monomial::from_factors([f]) {
            Some(m) => Self::monomial(m, Rational::one()),
            None => Self::zero(),
        }
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The rational value if this polynomial is a rational constant.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> + '_ {
        self.terms.iter()
    }

    pub fn to_monomials(&self) -> Vec<DiffMonomial> {
        self.terms
            .iter()
            .map(|(m, c)| DiffMonomial { coefficient: c.clone(), factors: m.flat().cloned().collect() })
            .collect()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> DiffPoly {
        let mut acc = DiffPoly::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Coefficient of the leading monomial (first in normal order).
    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.terms.values().next()
    }

    /// Scaled so that the leading coefficient is one; the zero polynomial is
    /// returned unchanged. Two equations `p = 0` and `q = 0` are the same
    /// equation iff their monic forms agree.
    pub fn monic(&self) -> DiffPoly {
        match self.leading_coefficient() {
            Some(c) => self.scale(&(Rational::one() / c)),
            None => DiffPoly::zero(),
        }
    }

    /// All generators that occur.
    pub fn generators(&self) -> Vec<Generator> {
        let mut gs: Vec<Generator> =
            self.terms.keys().flat_map(|m| m.0.iter().map(|(f, _)| f.generator.clone())).collect();
        gs.sort();
        gs.dedup();
        gs
    }

    pub fn mentions(&self, g: &Generator) -> bool {
        self.terms.keys().any(|m| m.mentions(g))
    }

    pub fn mentions_time_of(&self, g: &Generator) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(f, _)| &f.generator == g && f.t_order > 0))
    }

    pub fn has_time_derivative(&self) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(f, _)| f.t_order > 0))
    }

    pub fn max_x_order(&self) -> u32 {
        self.terms.keys().flat_map(|m| m.0.iter().map(|(f, _)| f.x_order)).max().unwrap_or(0)
    }

    /// Total derivative in x (Leibniz rule).
    pub fn dx(&self) -> DiffPoly {
        self.derive(|f| Ok(Some(f.dx()))).expect("x-derivative is total")
    }

    pub fn dx_n(&self, n: u32) -> DiffPoly {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.dx();
        }
        p
    }

    /// Total derivative in t. Fails if some factor already carries a
    /// t-derivative.
    pub fn dt(&self) -> Result<DiffPoly> {
        self.derive(|f| {
            if f.t_order >= 1 && !f.generator.is_constant() {
                return Err(Error::TimeOrderExceeded { generator: f.generator.name().to_string() });
            }
            Ok(Some(Factor { t_order: f.t_order + 1, ..f.clone() }))
        })
    }

    fn derive<F>(&self, d: F) -> Result<DiffPoly>
    where
        F: Fn(&Factor) -> Result<Option<Factor>>,
    {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            for (idx, (f, e)) in m.0.iter().enumerate() {
                if f.generator.is_constant() {
                    continue;
                }
                let Some(df) = d(f)? else { continue };
                let rest = m.without_one(idx);
                if let Some(dm) = Monomial::from_factors([df]) {
                    out.add_term(rest.mul(&dm), c * Rational::from_integer(BigInt::from(*e)));
                }
            }
        }
        Ok(out)
    }

    /// Replaces every factor for which `rule` returns a polynomial.
    pub fn replace_factors<F>(&self, mut rule: F) -> Result<DiffPoly>
    where
        F: FnMut(&Factor) -> Result<Option<DiffPoly>>,
    {
        let mut cache: HashMap<Factor, Option<DiffPoly>> = HashMap::new();
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            let mut kept: Vec<Factor> = Vec::new();
            let mut acc = DiffPoly::constant(c.clone());
            for (f, e) in &m.0 {
                let rep = match cache.get(f) {
                    Some(r) => r.clone(),
                    None => {
                        let r = rule(f)?;
                        cache.insert(f.clone(), r.clone());
                        r
                    }
                };
                match rep {
                    Some(r) => acc = &acc * &r.pow(*e),
                    None => kept.extend(std::iter::repeat_n(f.clone(), *e as usize)),
                }
            }
            if let Some(km) = Monomial::from_factors(kept) {
                acc = &acc * &DiffPoly::monomial(km, Rational::one());
                out += acc;
            }
        }
        Ok(out)
    }

    /// Replaces the generator `g` (and all its derivatives) by `expr`:
    /// the factor `g` with orders `(x, t)` becomes `d_t^t d_x^x expr`.
    pub fn substitute_generator(&self, g: &Generator, expr: &DiffPoly) -> Result<DiffPoly> {
        self.replace_factors(|f| {
            if &f.generator != g {
                return Ok(None);
            }
            let mut r = expr.dx_n(f.x_order);
            for _ in 0..f.t_order {
                r = r.dt()?;
            }
            Ok(Some(r))
        })
    }

    /// Applies the time rule `g_t -> rule`, including inside higher
    /// x-derivatives (`g_{x..x t}` becomes `d_x^n rule`).
    pub fn substitute_time(&self, g: &Generator, rule: &DiffPoly) -> Result<DiffPoly> {
        let cyclic = rule.terms.keys().any(|m| m.0.iter().any(|(f, _)| &f.generator == g && f.t_order > 0));
        if cyclic {
            return Err(Error::SubstitutionCycle { target: format!("{}_t", g.name()) });
        }
        self.replace_factors(|f| {
            if &f.generator == g && f.t_order == 1 {
                Ok(Some(rule.dx_n(f.x_order)))
            } else {
                Ok(None)
            }
        })
    }

    /// Numerical value given values for every factor that occurs.
    pub fn eval<T, F>(&self, env: F) -> T
    where
        T: Clone + Zero + One + Mul<Output = T> + Add<Output = T> + From<f64>,
        F: Fn(&Factor) -> T,
    {
        let mut total = T::zero();
        for (m, c) in &self.terms {
            let mut term = T::from(c.to_f64().unwrap_or(f64::NAN));
            for (f, e) in &m.0 {
                let v = env(f);
                for _ in 0..*e {
                    term = term * v.clone();
                }
            }
            total = total + term;
        }
        total
    }
}

impl From<Rational> for DiffPoly {
    fn from(c: Rational) -> Self {
        DiffPoly::constant(c)
    }
}

impl AddAssign for DiffPoly {
    fn add_assign(&mut self, rhs: DiffPoly) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl<'a> AddAssign<&'a DiffPoly> for DiffPoly {
    fn add_assign(&mut self, rhs: &'a DiffPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl<'a> Add<&'a DiffPoly> for &'a DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: &'a DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for DiffPoly {
    type Output = DiffPoly;
    fn add(mut self, rhs: DiffPoly) -> DiffPoly {
        self += rhs;
        self
    }
}

impl<'a> Sub<&'a DiffPoly> for &'a DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: &'a DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Sub for DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: DiffPoly) -> DiffPoly {
        &self - &rhs
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        self.scale(&-Rational::one())
    }
}

impl Neg for DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        -&self
    }
}

impl<'a> Mul<&'a DiffPoly> for &'a DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &'a DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: DiffPoly) -> DiffPoly {
        &self * &rhs
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
