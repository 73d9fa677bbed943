//! Closed-form derivation of hierarchy members.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{
    build_system, q_gen, u_gen, y_gen, Fixed, FlowKind, HierarchyEquation, HierarchyIndex, NormalizationRecord,
    Relation,
};
use crate::diffpoly::{formal_integrate, rat, DiffPoly, Generator, Laurent, Rational};
use crate::error::{Error, Result};

/// Choices for the free constants of the recursion.
#[derive(Clone, Debug)]
pub struct Normalizations {
    /// The coefficient fixed by the homogeneous end of the system:
    /// `u_r` for q-flows, `u_0` for y-flows.
    pub leading: DiffPoly,
    /// Integration constants keyed by the index of the relation they enter.
    /// Missing q-flow entries default to 0; for y-flows the first relation
    /// defaults to the designated constant `omega0` and the rest to 0.
    pub constants: BTreeMap<usize, DiffPoly>,
    /// Fail with [`Error::NonlocalStep`] instead of returning a nonlocal
    /// relation.
    pub require_closed_form: bool,
}

impl Default for Normalizations {
    fn default() -> Self {
        Normalizations { leading: DiffPoly::one(), constants: BTreeMap::new(), require_closed_form: false }
    }
}

impl Normalizations {
    pub fn with_leading(mut self, p: DiffPoly) -> Self {
        self.leading = p;
        self
    }

    pub fn with_constant(mut self, j: usize, p: DiffPoly) -> Self {
        self.constants.insert(j, p);
        self
    }

    pub fn closed_form(mut self) -> Self {
        self.require_closed_form = true;
        self
    }
}

fn record(target: &str, value: &DiffPoly, note: &str) -> NormalizationRecord {
    NormalizationRecord { target: target.to_string(), value: value.to_text(), note: note.to_string() }
}

fn nonzero_constant(p: &DiffPoly, what: &str, index: usize) -> Result<Rational> {
    match p.as_rational() {
        Some(c) if !c.is_zero() => Ok(c),
        Some(_) => Err(Error::Domain(format!("{what} must be nonzero"))),
        None => Err(Error::NonlocalStep {
            index,
            relation: format!("{what} = {p} is not constant; the recursion needs 1/sqrt of it"),
        }),
    }
}

fn check_zero(label: &str, p: &DiffPoly) -> Result<()> {
    if p.is_zero() {
        Ok(())
    } else {
        Err(Error::CheckFailed(format!("{label} leaves residual {p}")))
    }
}

/// `2 u_x q + u q_x - u_xxx / 2`.
fn lenard(u: &DiffPoly, q: &DiffPoly) -> DiffPoly {
    &(&(u.dx() * q.clone()).scale(&rat(2, 1)) + &(u * &q.dx())) - &u.dx_n(3).scale(&rat(1, 2))
}

/// `2 u_x y + u y_x`.
fn transport(u: &DiffPoly, y: &DiffPoly) -> DiffPoly {
    &(u.dx() * y.clone()).scale(&rat(2, 1)) + &(u * &y.dx())
}

/// The q-flow with `y` fixed to a nonzero rational constant.
///
/// `u_r` is the leading normalization; `u_(j-1)` is obtained from the
/// `λ^j` equation by formal integration for `j = r ..= k+1`; coefficients
/// below `u_k` solve homogeneous equations and are set to zero.
pub fn derive_q_flow(idx: HierarchyIndex, y: &DiffPoly, norm: &Normalizations) -> Result<HierarchyEquation> {
    let c = nonzero_constant(y, "y", idx.r)?;
    let q = q_gen().poly();
    let (r, k) = (idx.r, idx.k);
    let mut coeffs: Vec<DiffPoly> = vec![DiffPoly::zero(); r + 1];
    let mut normalizations = vec![record(&format!("u{r}"), &norm.leading, "top coefficient")];
    coeffs[r] = norm.leading.clone();
    let inv2c = Rational::one() / (rat(2, 1) * c.clone());
    for j in (k + 1..=r).rev() {
        let integrand = lenard(&coeffs[j], &q);
        let prim = formal_integrate(&integrand).map_err(|_| Error::NonlocalStep {
            index: j - 1,
            relation: format!("2 y u{}_x = {}", j - 1, integrand),
        })?;
        let constant = norm.constants.get(&(j - 1)).cloned().unwrap_or_default();
        normalizations.push(record(&format!("u{}", j - 1), &constant, "integration constant"));
        coeffs[j - 1] = &prim.scale(&inv2c) + &constant;
    }
    for (j, _) in coeffs.iter().enumerate().take(k) {
        normalizations.push(record(&format!("u{j}"), &DiffPoly::zero(), "homogeneous equation below k"));
    }

    let mut rhs = lenard(&coeffs[k], &q);
    if k > 0 {
        rhs = &rhs - &transport(&coeffs[k - 1], y);
    }

    let sys = build_system(idx, Fixed::Y(y.clone()));
    let subs: Vec<(Generator, DiffPoly)> = coeffs.iter().enumerate().map(|(j, c)| (u_gen(j), c.clone())).collect();
    for (j, e) in sys.reduce(&subs, &[(q_gen(), rhs.clone())])?.iter().enumerate() {
        check_zero(&format!("q-flow equation {j}"), e)?;
    }

    Ok(HierarchyEquation {
        index: idx,
        kind: FlowKind::Q,
        lhs: q_gen().dt(0),
        rhs,
        relations: coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| Relation::Explicit { target: u_gen(j), value: c.clone() })
            .collect(),
        coefficients: coeffs.into_iter().map(Some).collect(),
        normalizations,
        reduced: None,
    })
}

/// The y-flow with `q` fixed to a nonzero rational constant and `k = r`.
///
/// `u_0` is the leading normalization. The `λ^1` equation is exact and
/// expresses `y` through `u_1`; each higher equation gives
/// `2q u_j - u_(j,xx)/2 = ∫(2y u_(j-1,x) + y_x u_(j-1))`, integrated after
/// eliminating `y`. The result keeps `u_1` (and implicit `u_j`) as unknowns.
pub fn derive_y_flow(idx: HierarchyIndex, q: &DiffPoly, norm: &Normalizations) -> Result<HierarchyEquation> {
    let cq = nonzero_constant(q, "q", 0)?;
    let (r, k) = (idx.r, idx.k);
    if k != r {
        return Err(Error::NonlocalStep {
            index: r,
            relation: format!("2 u{r}_x y + u{r} y_x = 0 forces u{r} ~ y^(-1/2) when k < r"),
        });
    }
    let n0 = nonzero_constant(&norm.leading, "u0", 0)?;
    let y = y_gen();
    let two_q = rat(2, 1) * cq.clone();
    let helmholtz = |g: &Generator| &g.poly().scale(&two_q) - &g.deriv(2).scale(&rat(1, 2));

    let mut normalizations = vec![record("u0", &norm.leading, "homogeneous bottom equation")];
    let mut relations = vec![Relation::Explicit { target: u_gen(0), value: norm.leading.clone() }];
    let mut coeffs: Vec<Option<DiffPoly>> = vec![Some(norm.leading.clone())];
    coeffs.extend((1..=r).map(|_| None));

    let big_y = if r >= 1 {
        let omega = norm.constants.get(&1).cloned().unwrap_or_else(|| Generator::constant("omega0").poly());
        normalizations.push(record("y", &omega, "integration constant of the first relation"));
        let v = &helmholtz(&u_gen(1)).scale(&(Rational::one() / n0.clone())) + &omega;
        relations.push(Relation::Explicit { target: y.clone(), value: v.clone() });
        Some((v, omega))
    } else {
        None
    };

    let mut closed: Vec<(usize, DiffPoly)> = Vec::new();
    if let Some((yv, _)) = &big_y {
        for j in 2..=r {
            let integrand = transport(&u_gen(j - 1).poly(), &y.poly()).substitute_generator(&y, yv)?;
            match formal_integrate(&integrand) {
                Ok(prim) => {
                    let constant = norm.constants.get(&j).cloned().unwrap_or_default();
                    normalizations.push(record(&format!("relation {j}"), &constant, "integration constant"));
                    let rhs = &prim + &constant;
                    relations.push(Relation::Implicit { lhs: helmholtz(&u_gen(j)), rhs: rhs.clone() });
                    closed.push((j, rhs));
                }
                Err(_) if norm.require_closed_form => {
                    return Err(Error::NonlocalStep {
                        index: j,
                        relation: format!("({})_x = {}", helmholtz(&u_gen(j)), integrand),
                    });
                }
                Err(_) => {
                    relations.push(Relation::Nonlocal { index: j, lhs: helmholtz(&u_gen(j)), integrand });
                }
            }
        }
    }

    let ur = if r == 0 { norm.leading.clone() } else { u_gen(r).poly() };
    let rhs = transport(&ur, &y.poly());

    // each equation of the system vanishes modulo the relations
    let sys = build_system(idx, Fixed::Q(q.clone()));
    let e = sys.reduce(&[(u_gen(0), norm.leading.clone())], &[(y.clone(), rhs.clone())])?;
    check_zero("y-flow equation 0", &e[0])?;
    check_zero(&format!("y-flow equation {}", r + 1), &e[r + 1])?;
    if let Some((yv, omega)) = &big_y {
        let g1 = &(&y.poly() - omega).scale(&n0) - &helmholtz(&u_gen(1));
        check_zero("y-flow equation 1", &(&e[1] + &g1.dx()))?;
        for (j, f) in &closed {
            let g = f - &helmholtz(&u_gen(*j));
            check_zero(&format!("y-flow equation {j}"), &(&e[*j].substitute_generator(&y, yv)? + &g.dx()))?;
        }
    }

    let reduced = match &big_y {
        Some((yv, _)) => Some(&yv.dt()? - &rhs.substitute_generator(&y, yv)?),
        None => None,
    };

    Ok(HierarchyEquation {
        index: idx,
        kind: FlowKind::Y,
        lhs: y.dt(0),
        rhs,
        coefficients: coeffs,
        relations,
        normalizations,
        reduced,
    })
}

/// The first q-flow (`r = 1, k = 0`) for a fixed t-independent density,
/// written with the auxiliary generator `s = y^(-1/4)`.
///
/// Then `u_1 = s^2`, the canonical potential is `s_xx / s`, and
/// `u_0 = s^6 (q - s_xx/s) / 2 = (s^6 q - s^5 s_xx) / 2`.
pub fn variable_bottom_kdv() -> Result<HierarchyEquation> {
    let s = Generator::function("s");
    let q = q_gen().poly();
    let sp = s.poly();
    let u1 = sp.pow(2);
    let u0 = (&(&sp.pow(6) * &q) - &(&sp.pow(5) * &s.deriv(2))).scale(&rat(1, 2));
    let rhs = lenard(&u0, &q);

    // system (r=1, k=0) with y = s^-4, checked after clearing powers of s
    let lift = |p: &DiffPoly| Laurent::poly(p.clone(), &s);
    let y = Laurent::power(&s, -4);
    let lq = lift(&q);
    let top = &(&lift(&u1).dx() * &y).scale(&rat(2, 1)) + &(&lift(&u1) * &y.dx());
    let mid = &(&(&(&lift(&u1).dx() * &lq).scale(&rat(2, 1)) + &(&lift(&u1) * &lq.dx()))
        - &lift(&u1).dx_n(3).scale(&rat(1, 2)))
        - &(&(&lift(&u0).dx() * &y).scale(&rat(2, 1)) + &(&lift(&u0) * &y.dx()));
    check_zero("variable-bottom top equation", &top.num)?;
    check_zero("variable-bottom middle equation", &mid.num)?;

    Ok(HierarchyEquation {
        index: HierarchyIndex { r: 1, k: 0 },
        kind: FlowKind::Q,
        lhs: q_gen().dt(0),
        rhs,
        coefficients: vec![Some(u0.clone()), Some(u1.clone())],
        relations: vec![
            Relation::Implicit { lhs: &y_gen().poly() * &sp.pow(4), rhs: DiffPoly::one() },
            Relation::Explicit { target: u_gen(1), value: u1 },
            Relation::Explicit { target: u_gen(0), value: u0 },
        ],
        normalizations: vec![
            record("u1", &sp.pow(2), "y^(-1/2) from the top equation"),
            record("u0", &DiffPoly::zero(), "integration constant c"),
        ],
        reduced: None,
    })
}
