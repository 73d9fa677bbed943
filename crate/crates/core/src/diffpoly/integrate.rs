//! Formal antiderivatives by graded candidate enumeration.
//!
//! `d/dx` maps a monomial to monomials with the same multiset of
//! `(generator, t_order)` symbols and total x-order one higher. Splitting the
//! integrand into such classes, each class has a finite candidate space of
//! antiderivative monomials, and exactness reduces to a rational linear
//! system. The search is therefore complete.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{DiffPoly, Factor, Generator, Monomial, Rational};
use crate::error::{Error, Result};

type Symbol = (Generator, u8);

fn content(m: &Monomial) -> Vec<(Symbol, u32)> {
    let mut c: BTreeMap<Symbol, u32> = BTreeMap::new();
    for (f, e) in m.factors() {
        *c.entry((f.generator.clone(), f.t_order)).or_insert(0) += e;
    }
    c.into_iter().collect()
}

/// Non-increasing sequences of `parts` nonnegative integers summing to `total`.
fn partitions(total: u32, parts: u32, max: u32, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
    if parts == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let hi = total.min(max);
    for first in (0..=hi).rev() {
        // remaining parts can absorb at most `first` each
        if first * (parts - 1) + first < total {
            break;
        }
        cur.push(first);
        partitions(total - first, parts - 1, first, out, cur);
        cur.pop();
    }
}

fn candidates(sym: &[(Symbol, u32)], total_x: u32) -> Vec<Monomial> {
    fn rec(sym: &[(Symbol, u32)], total_x: u32, acc: &mut Vec<Factor>, out: &mut Vec<Monomial>) {
        let Some(((g, t), count)) = sym.first() else {
            if total_x == 0 {
                if let Some(m) = Monomial::from_factors(acc.clone()) {
                    out.push(m);
                }
            }
            return;
        };
        let budgets: Vec<u32> = if g.is_constant() { vec![0] } else { (0..=total_x).collect() };
        for b in budgets {
            let mut parts = Vec::new();
            partitions(b, *count, b, &mut parts, &mut Vec::new());
            for p in parts {
                let n = acc.len();
                acc.extend(p.iter().map(|&x| Factor { generator: g.clone(), t_order: *t, x_order: x }));
                rec(&sym[1..], total_x - b, acc, out);
                acc.truncate(n);
            }
        }
    }
    let mut out = Vec::new();
    rec(sym, total_x, &mut Vec::new(), &mut out);
    out
}

/// Solves `A c = b` over the rationals; columns of `A` are sparse maps.
/// Returns any solution (free unknowns set to zero), or `None` if inconsistent.
fn solve(columns: &[BTreeMap<Monomial, Rational>], rhs: &BTreeMap<Monomial, Rational>) -> Option<Vec<Rational>> {
    let mut rows: Vec<Monomial> = columns.iter().flat_map(|c| c.keys().cloned()).chain(rhs.keys().cloned()).collect();
    rows.sort();
    rows.dedup();
    let ncol = columns.len();
    let mut mat: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            let mut row: Vec<Rational> =
                columns.iter().map(|c| c.get(r).cloned().unwrap_or_else(Rational::zero)).collect();
            row.push(rhs.get(r).cloned().unwrap_or_else(Rational::zero));
            row
        })
        .collect();

    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncol {
        let Some(p) = (row..mat.len()).find(|&i| !mat[i][col].is_zero()) else { continue };
        mat.swap(row, p);
        let inv = Rational::one() / mat[row][col].clone();
        for v in mat[row].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..mat.len() {
            if i != row && !mat[i][col].is_zero() {
                let factor = mat[i][col].clone();
                for j in col..=ncol {
                    let delta = &factor * &mat[row][j];
                    mat[i][j] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == mat.len() {
            break;
        }
    }
    if mat[row..].iter().any(|r| !r[ncol].is_zero()) {
        return None;
    }
    let mut sol = vec![Rational::zero(); ncol];
    for (i, &c) in pivots.iter().enumerate() {
        sol[c] = mat[i][ncol].clone();
    }
    Some(sol)
}

/// Returns `P` with `d/dx P = p`, with integration constant zero.
pub fn formal_integrate(p: &DiffPoly) -> Result<DiffPoly> {
    let mut classes: BTreeMap<(Vec<(Symbol, u32)>, u32), BTreeMap<Monomial, Rational>> = BTreeMap::new();
    for (m, c) in p.terms() {
        classes.entry((content(m), m.total_x_order())).or_default().insert(m.clone(), c.clone());
    }
    let mut out = DiffPoly::zero();
    for ((sym, total_x), target) in classes {
        if total_x == 0 {
            return Err(not_exact(p));
        }
        let cands = candidates(&sym, total_x - 1);
        let columns: Vec<BTreeMap<Monomial, Rational>> = cands
            .iter()
            .map(|m| {
                DiffPoly::monomial(m.clone(), Rational::one())
                    .dx()
                    .terms()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect()
            })
            .collect();
        let sol = solve(&columns, &target).ok_or_else(|| not_exact(p))?;
        for (m, c) in cands.into_iter().zip(sol) {
            out.add_term(m, c);
        }
    }
    debug_assert_eq!(&out.dx(), p);
    Ok(out)
}

fn not_exact(p: &DiffPoly) -> Error {
    Error::NotExact { expr: p.to_text() }
}
