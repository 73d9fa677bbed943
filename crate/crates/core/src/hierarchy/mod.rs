//! Zero-curvature data and the Sturm–Liouville hierarchies.
//!
//! With `A = [[0, 1], [q - λy, 0]]` and `U = Σ u_j λ^j`, the relation
//! `λ^k A_t - B_x + [A, B] = 0` forces `B` into the shape built by
//! [`BMatrix::new`] and leaves one scalar condition,
//!
//! ```text
//! λ^k (q_t - λ y_t) = 2(q - λy) U_x + (q_x - λ y_x) U - U_xxx / 2,
//! ```
//!
//! whose coefficients of `λ^0 ..= λ^(r+1)` form the system solved by
//! [`derive_q_flow`] and [`derive_y_flow`].

mod derive;
mod stationary;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diffpoly::{rat, DiffPoly, Generator, LambdaMatrix, LambdaPoly};
use crate::error::{Error, Result};

pub use derive::{derive_q_flow, derive_y_flow, variable_bottom_kdv, Normalizations};
pub use stationary::{
    ex_stationary_residual, stationary_check, stationary_lemma_residual, tilde_q, tilde_q_point, tilde_q_symbolic,
    zero_curvature_residual_grid, StationaryReport, ZcGridData,
};

/// `(r, k)`: `U` has λ-degree `r` and `η(λ) = λ^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyIndex {
    pub r: usize,
    pub k: usize,
}

impl HierarchyIndex {
    pub fn new(r: usize, k: usize) -> Result<Self> {
        if k > r {
            return Err(Error::InvalidArgument(format!("need 0 <= k <= r, got r={r}, k={k}")));
        }
        Ok(HierarchyIndex { r, k })
    }
}

/// Standard generator names used throughout the crate.
pub fn q_gen() -> Generator {
    Generator::function("q")
}

pub fn y_gen() -> Generator {
    Generator::function("y")
}

/// `u0, u1, ...`.
pub fn u_gen(j: usize) -> Generator {
    Generator::function(&format!("u{j}"))
}

pub fn u_gens(r: usize) -> Vec<Generator> {
    (0..=r).map(u_gen).collect()
}

/// Which function is held fixed when building the system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fixed {
    /// `y` replaced by a t-independent expression; `q` flows.
    Y(DiffPoly),
    /// `q` replaced by a t-independent expression; `y` flows.
    Q(DiffPoly),
    /// Both kept as unknown functions.
    General,
}

/// The `r + 2` equations obtained by matching powers of λ. `equations[j]`
/// is the coefficient of `λ^j` in
/// `2wU_x + w_xU - U_xxx/2 - λ^k w_t` with `w = q - λy`, each set to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroCurvatureSystem {
    pub index: HierarchyIndex,
    pub equations: Vec<DiffPoly>,
    pub unknowns: Vec<Generator>,
    pub fixed: Fixed,
}

/// `q` and `y` as polynomials after applying `fixed`.
fn potential_pair(fixed: &Fixed) -> (DiffPoly, DiffPoly) {
    match fixed {
        Fixed::Y(y) => (q_gen().poly(), y.clone()),
        Fixed::Q(q) => (q.clone(), y_gen().poly()),
        Fixed::General => (q_gen().poly(), y_gen().poly()),
    }
}

/// Time derivative of a potential: fixed expressions are t-independent.
fn time_derivative(fixed: &Fixed, which: char) -> DiffPoly {
    match (fixed, which) {
        (Fixed::Y(_), 'y') | (Fixed::Q(_), 'q') => DiffPoly::zero(),
        (_, 'q') => q_gen().dt(0),
        _ => y_gen().dt(0),
    }
}

/// `w = q - λy` as a λ-polynomial.
pub fn spectral_potential(q: &DiffPoly, y: &DiffPoly) -> LambdaPoly {
    LambdaPoly::new(vec![q.clone(), -y])
}

pub fn build_system(idx: HierarchyIndex, fixed: Fixed) -> ZeroCurvatureSystem {
    let (q, y) = potential_pair(&fixed);
    let w = spectral_potential(&q, &y);
    let wt = LambdaPoly::new(vec![time_derivative(&fixed, 'q'), -time_derivative(&fixed, 'y')]);
    let unknowns = u_gens(idx.r);
    let u = LambdaPoly::from_generators(&unknowns);
    let ux = u.dx();
    let expr = &(&(&(&w * &ux).scale(&rat(2, 1)) + &(&w.dx() * &u)) - &u.dx().dx().dx().scale(&rat(1, 2)))
        - &wt.shift(idx.k);
    let equations = (0..=idx.r + 1).map(|j| expr.coeff(j)).collect();
    ZeroCurvatureSystem { index: idx, equations, unknowns, fixed }
}

impl ZeroCurvatureSystem {
    /// Applies generator substitutions, then time rules, to every equation.
    pub fn reduce(&self, subs: &[(Generator, DiffPoly)], time_rules: &[(Generator, DiffPoly)]) -> Result<Vec<DiffPoly>> {
        self.equations
            .iter()
            .map(|e| {
                let mut e = e.clone();
                for (g, v) in subs {
                    e = e.substitute_generator(g, v)?;
                }
                for (g, v) in time_rules {
                    e = e.substitute_time(g, v)?;
                }
                Ok(e)
            })
            .collect()
    }
}

/// `B = [[T, U], [V, Z]]` with `T = -U_x/2 + c`, `Z = U_x/2 + c`,
/// `V = -U_xx/2 + (q - λy) U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BMatrix {
    pub t: LambdaPoly,
    pub u: LambdaPoly,
    pub v: LambdaPoly,
    pub z: LambdaPoly,
}

impl BMatrix {
    /// `c` is the x-independent gauge term; pass [`LambdaPoly::zero`] for the
    /// default.
    pub fn new(u: &LambdaPoly, q: &DiffPoly, y: &DiffPoly, c: &LambdaPoly) -> Self {
        let half = rat(1, 2);
        let ux = u.dx();
        let t = &ux.scale(&-half.clone()) + c;
        let z = &ux.scale(&half) + c;
        let v = &u.dx().dx().scale(&-half) + &(&spectral_potential(q, y) * u);
        BMatrix { t, u: u.clone(), v, z }
    }

    pub fn matrix(&self) -> LambdaMatrix {
        LambdaMatrix::new(self.t.clone(), self.u.clone(), self.v.clone(), self.z.clone())
    }
}

/// Exact zero-curvature residual `λ^k A_t - B_x + [A, B]`.
///
/// `subs` replaces generators (for instance `u_j` by resolved coefficients)
/// after the flow rules in `time_rules` have been applied, so a rule for
/// `y_t` may be stated in terms of `y` before `y` itself is eliminated.
pub fn zero_curvature_residual(
    q: &DiffPoly,
    y: &DiffPoly,
    u: &LambdaPoly,
    k: usize,
    time_rules: &[(Generator, DiffPoly)],
    subs: &[(Generator, DiffPoly)],
) -> Result<LambdaMatrix> {
    let w = spectral_potential(q, y);
    let one = LambdaPoly::constant(DiffPoly::one());
    let a = LambdaMatrix::new(LambdaPoly::zero(), one, w.clone(), LambdaPoly::zero());
    let at = a.dt()?;
    let b = BMatrix::new(u, q, y, &LambdaPoly::zero()).matrix();
    let res = &(&at.map(|p| p.shift(k)) - &b.dx()) + &a.commutator(&b);
    res.try_map(|p| {
        p.try_map(|c| {
            let mut c = c.clone();
            for (g, rule) in time_rules {
                c = c.substitute_time(g, rule)?;
            }
            for (g, v) in subs {
                c = c.substitute_generator(g, v)?;
            }
            Ok(c)
        })
    })
}

/// How an integration constant or free coefficient was fixed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub target: String,
    pub value: String,
    pub note: String,
}

/// A relation among the coefficients that the derivation keeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `target = value`.
    Explicit { target: Generator, value: DiffPoly },
    /// `lhs = rhs`, both differential polynomials.
    Implicit { lhs: DiffPoly, rhs: DiffPoly },
    /// `d/dx lhs = integrand`, where the integrand has no
    /// differential-polynomial antiderivative.
    Nonlocal { index: usize, lhs: DiffPoly, integrand: DiffPoly },
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Explicit { target, value } => write!(f, "{} = {}", target.name(), value),
            Relation::Implicit { lhs, rhs } => write!(f, "{lhs} = {rhs}"),
            Relation::Nonlocal { lhs, integrand, .. } => write!(f, "({lhs})_x = {integrand}"),
        }
    }
}

impl Relation {
    pub fn to_latex(&self) -> String {
        match self {
            Relation::Explicit { target, value } => {
                format!("{} = {}", Generator::poly(target).to_latex(), value.to_latex())
            }
            Relation::Implicit { lhs, rhs } => format!("{} = {}", lhs.to_latex(), rhs.to_latex()),
            Relation::Nonlocal { lhs, integrand, .. } => {
                format!("\\left({}\\right)_{{x}} = {}", lhs.to_latex(), integrand.to_latex())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    Q,
    Y,
}

/// A derived hierarchy member `lhs = rhs` together with how the
/// coefficients `u_j` were resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyEquation {
    pub index: HierarchyIndex,
    pub kind: FlowKind,
    /// `q_t` or `y_t`.
    pub lhs: DiffPoly,
    pub rhs: DiffPoly,
    /// Resolved `u_j`, or `None` when only implicit relations determine it.
    pub coefficients: Vec<Option<DiffPoly>>,
    pub relations: Vec<Relation>,
    pub normalizations: Vec<NormalizationRecord>,
    /// For y-flows: the flow rewritten as one equation (set to zero) in the
    /// `u_j` after eliminating `y`.
    pub reduced: Option<DiffPoly>,
}

impl HierarchyEquation {
    /// `lhs - rhs`.
    pub fn zero_form(&self) -> DiffPoly {
        &self.lhs - &self.rhs
    }

    pub fn to_text(&self) -> String {
        format!("{} = {}", self.lhs, self.rhs)
    }

    pub fn to_latex(&self) -> String {
        format!("{} = {}", self.lhs.to_latex(), self.rhs.to_latex())
    }

    /// Every relation and the flow, one per line.
    pub fn system_text(&self) -> Vec<String> {
        let mut v: Vec<String> = self.relations.iter().map(ToString::to_string).collect();
        v.push(self.to_text());
        v
    }

    pub fn system_latex(&self) -> String {
        let mut rows: Vec<String> = self.relations.iter().map(Relation::to_latex).collect();
        rows.push(self.to_latex());
        format!("\\begin{{cases}}\n{}\n\\end{{cases}}", rows.join(" \\\\\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> DiffPoly {
        q_gen().poly()
    }

    #[test]
    fn kdv_system_shape() {
        let sys = build_system(HierarchyIndex::new(1, 0).unwrap(), Fixed::Y(DiffPoly::one()));
        assert_eq!(sys.equations.len(), 3);
        let (u0, u1) = (u_gen(0), u_gen(1));
        assert_eq!(sys.equations[2], u1.deriv(1).scale(&rat(-2, 1)));
        let e1 = &(&(&(&u1.deriv(1) * &q()).scale(&rat(2, 1)) - &u0.deriv(1).scale(&rat(2, 1)))
            + &(&u1.poly() * &q_gen().deriv(1)))
            - &u1.deriv(3).scale(&rat(1, 2));
        assert_eq!(sys.equations[1], e1);
        let e0 = &(&(&(&u0.deriv(1) * &q()).scale(&rat(2, 1)) + &(&u0.poly() * &q_gen().deriv(1)))
            - &u0.deriv(3).scale(&rat(1, 2)))
            - &q_gen().dt(0);
        assert_eq!(sys.equations[0], e0);
    }

    #[test]
    fn ch_system_shape() {
        let sys = build_system(HierarchyIndex::new(1, 1).unwrap(), Fixed::Q(DiffPoly::one()));
        let (u0, u1, y) = (u_gen(0), u_gen(1), y_gen());
        assert_eq!(sys.equations[0], &u0.deriv(1).scale(&rat(2, 1)) - &u0.deriv(3).scale(&rat(1, 2)));
        let e1 = &(&(&u1.deriv(1).scale(&rat(2, 1)) - &(&u0.deriv(1) * &y.poly()).scale(&rat(2, 1)))
            - &(&u0.poly() * &y.deriv(1)))
            - &u1.deriv(3).scale(&rat(1, 2));
        assert_eq!(sys.equations[1], e1);
        // y_t = 2 u1_x y + u1 y_x, written as (y_t - rhs) = 0
        let e2 = &(&y.dt(0) - &(&u1.deriv(1) * &y.poly()).scale(&rat(2, 1))) - &(&u1.poly() * &y.deriv(1));
        assert_eq!(sys.equations[2], e2);
    }

    #[test]
    fn r0_general_system() {
        let sys = build_system(HierarchyIndex::new(0, 0).unwrap(), Fixed::General);
        let (u0, y) = (u_gen(0), y_gen());
        assert_eq!(sys.equations.len(), 2);
        let top = &(&y.dt(0) - &(&u0.deriv(1) * &y.poly()).scale(&rat(2, 1))) - &(&u0.poly() * &y.deriv(1));
        assert_eq!(sys.equations[1], top);
        let bottom = &(&(&(&u0.deriv(1) * &q()).scale(&rat(2, 1)) + &(&u0.poly() * &q_gen().deriv(1)))
            - &u0.deriv(3).scale(&rat(1, 2)))
            - &q_gen().dt(0);
        assert_eq!(sys.equations[0], bottom);
    }

    #[test]
    fn time_derivatives_sit_at_k_and_k_plus_one() {
        for r in 0..4 {
            for k in 0..=r {
                let sys = build_system(HierarchyIndex::new(r, k).unwrap(), Fixed::General);
                for (j, e) in sys.equations.iter().enumerate() {
                    assert_eq!(e.mentions_time_of(&q_gen()), j == k, "q_t at r={r} k={k} j={j}");
                    assert_eq!(e.mentions_time_of(&y_gen()), j == k + 1, "y_t at r={r} k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn b_matrix_identities() {
        let u = LambdaPoly::from_generators(&u_gens(2));
        let b = BMatrix::new(&u, &q(), &y_gen().poly(), &LambdaPoly::zero());
        assert_eq!(&b.z - &b.t, u.dx());
        let expect_v = &u.dx().dx().scale(&rat(-1, 2)) + &(&spectral_potential(&q(), &y_gen().poly()) * &u);
        assert_eq!(b.v, expect_v);
        let c = LambdaPoly::constant(Generator::constant("c").poly());
        let bc = BMatrix::new(&u, &q(), &y_gen().poly(), &c);
        assert_eq!(&bc.z - &bc.t, u.dx());
        assert_eq!(&bc.t + &bc.z, c.scale(&rat(2, 1)));
    }

    #[test]
    fn index_validation() {
        assert!(HierarchyIndex::new(1, 2).is_err());
    }
}
