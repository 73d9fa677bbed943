//! Large-`z` expansion of the Weyl functions, `z² = -λ`.
//!
//! Writing `m₊ = a₁z + a₀ + Σ a₋ⱼ z⁻ʲ` in the Riccati equation
//! `m_x + m² = q - λy` gives `a₁ = -√y`, `a₀ = -y_x/(4y)`,
//! `a₋₁ = (a₀,ₓ + a₀² - q)/(2√y)` and for `j ≥ 2`
//!
//! ```text
//! a₋ⱼ = -(1/(2a₁)) [a₋ⱼ₊₁,ₓ + Σ_{k=-j+1..0} a_k a₋ⱼ₊₁₋ₖ].
//! ```
//!
//! `m₋` carries the same coefficients with `z → -z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffpoly::{rat, DiffPoly, DiffPolyJson};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hierarchy::{q_gen, u_gen, FlowKind, HierarchyEquation, HierarchyIndex, NormalizationRecord, Relation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Coefficients `a₁, a₀, a₋₁, …, a₋N`, stored in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTable<T> {
    pub n: usize,
    coeffs: Vec<T>,
}

impl<T> ExpansionTable<T> {
    /// `a_j` for `1 ≥ j ≥ -N`.
    pub fn a(&self, j: i64) -> &T {
        assert!((-(self.n as i64)..=1).contains(&j), "index a_{j} outside table of order {}", self.n);
        &self.coeffs[(1 - j) as usize]
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }
}

pub type SymbolicExpansion = ExpansionTable<DiffPoly>;
pub type GridExpansion = ExpansionTable<Vec<f64>>;

/// Symbolic table for `y ≡ 1` in the generator `q`.
pub fn expansion_symbolic(n: usize) -> Result<SymbolicExpansion> {
    if n < 1 {
        return Err(Error::InsufficientOrder { have: n, need: 1 });
    }
    let q = q_gen().poly();
    let a1 = DiffPoly::int(-1);
    let a0 = DiffPoly::zero();
    let am1 = q.scale(&rat(-1, 2));
    let mut c = vec![a1, a0, am1];
    // c[1 - k] = a_k, and -1/(2a₁) = 1/2
    let inv = rat(1, 2);
    for j in 2..=n as i64 {
        let mut s = c[j as usize].dx();
        for k in (-j + 1)..=0 {
            let a_k = &c[(1 - k) as usize];
            let a_o = &c[(1 - (-j + 1 - k)) as usize];
            s += a_k * a_o;
        }
        c.push(s.scale(&inv));
    }
    Ok(ExpansionTable { n, coeffs: c })
}

/// Table on a grid for a general pair; requires `y ≥ delta`.
pub fn expansion_grid(grid: &Grid, q: &[f64], y: &[f64], n: usize, delta: f64) -> Result<GridExpansion> {
    grid.check_len(q)?;
    grid.check_len(y)?;
    if n < 1 {
        return Err(Error::InsufficientOrder { have: n, need: 1 });
    }
    if let Some(i) = y.iter().position(|&v| !(v >= delta)) {
        return Err(Error::Domain(format!("density y[{i}] = {} is below delta = {delta}", y[i])));
    }
    let np = grid.n;
    let sy: Vec<f64> = y.iter().map(|v| v.sqrt()).collect();
    let a1: Vec<f64> = sy.iter().map(|v| -v).collect();
    let yx = grid.derivative(y, 1);
    let a0: Vec<f64> = (0..np).map(|i| -yx[i] / (4.0 * y[i])).collect();
    let a0x = grid.derivative(&a0, 1);
    let am1: Vec<f64> = (0..np).map(|i| (a0x[i] + a0[i] * a0[i] - q[i]) / (2.0 * sy[i])).collect();
    let mut c = vec![a1, a0, am1];
    for j in 2..=n as i64 {
        let mut s = grid.derivative(&c[j as usize], 1);
        for k in (-j + 1)..=0 {
            let (ak, ao) = (&c[(1 - k) as usize], &c[(1 - (-j + 1 - k)) as usize]);
            for i in 0..np {
                s[i] += ak[i] * ao[i];
            }
        }
        let next: Vec<f64> = (0..np).map(|i| s[i] / (2.0 * sy[i])).collect();
        c.push(next);
    }
    Ok(ExpansionTable { n, coeffs: c })
}

impl SymbolicExpansion {
    /// `q = a₀,ₓ + a₀² - 2a₋₁` (with `√y = 1`).
    pub fn recover_q(&self) -> DiffPoly {
        &(&self.a(0).dx() + &self.a(0).pow(2)) - &self.a(-1).scale(&rat(2, 1))
    }

    /// `[{"index": j, "poly": …}]`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry {
            index: i64,
            poly: DiffPolyJson,
        }
        let v: Vec<Entry> = (0..self.coeffs.len())
            .map(|i| Entry { index: 1 - i as i64, poly: self.coeffs[i].to_json_value() })
            .collect();
        serde_json::to_string(&v).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Entry {
            index: i64,
            poly: DiffPolyJson,
        }
        let v: Vec<Entry> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut coeffs = Vec::with_capacity(v.len());
        for (i, e) in v.iter().enumerate() {
            if e.index != 1 - i as i64 {
                return Err(Error::Parse(format!("expansion entries out of order at index {}", e.index)));
            }
            coeffs.push(DiffPoly::from_json_value(&e.poly)?);
        }
        if coeffs.len() < 3 {
            return Err(Error::Parse("expansion table needs a1, a0 and a-1".into()));
        }
        Ok(ExpansionTable { n: coeffs.len() - 2, coeffs })
    }

    /// Value at constant `q` (all derivatives zero).
    pub fn at_constant(&self, q: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|p| p.eval(|f| if f.x_order == 0 && f.t_order == 0 { q } else { 0.0 }))
            .collect()
    }
}

impl GridExpansion {
    /// Coefficients at grid point `i`, ordered `a₁, a₀, a₋₁, …`.
    pub fn at(&self, i: usize) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[i]).collect()
    }

    /// `q = a₀,ₓ + a₀² - 2√y a₋₁`.
    pub fn recover_q(&self, grid: &Grid) -> Vec<f64> {
        let a0x = grid.derivative(self.a(0), 1);
        (0..grid.n).map(|i| a0x[i] + self.a(0)[i].powi(2) + 2.0 * self.a(1)[i] * self.a(-1)[i]).collect()
    }

    /// Residual `m_x + m² - (q + z² y)` of the truncated series for `m₊` at
    /// grid point `i`.
    pub fn riccati_residual(&self, grid: &Grid, q: &[f64], y: &[f64], i: usize, z: Complex64) -> Complex64 {
        let m = series_value(&self.at(i), z, Side::Plus);
        let dcoeffs: Vec<f64> = self.coeffs.iter().map(|c| grid.derivative(c, 1)[i]).collect();
        let mx = series_value(&dcoeffs, z, Side::Plus);
        mx + m * m - (q[i] + z * z * y[i])
    }
}

/// `z = √(-λ)` with `Re z ≥ 0`; for `λ > 0` the `λ + i0` limit gives
/// `z = -i√λ`.
pub fn z_of_lambda(lambda: Complex64) -> Complex64 {
    let z = (-lambda).sqrt();
    if lambda.im == 0.0 && lambda.re > 0.0 {
        return Complex64::new(0.0, -lambda.re.sqrt());
    }
    z
}

/// Truncated series `m₊ = a₁z + a₀ + Σ a₋ⱼ z⁻ʲ` or
/// `m₋ = -a₁z + a₀ + Σ (-1)ʲ a₋ⱼ z⁻ʲ` from coefficients `a₁, a₀, a₋₁, …`.
pub fn series_value(coeffs: &[f64], z: Complex64, side: Side) -> Complex64 {
    let s = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let zz = z * s;
    let mut acc = coeffs[0] * zz + coeffs[1];
    let inv = 1.0 / zz;
    let mut p = inv;
    for c in &coeffs[2..] {
        acc += c * p;
        p *= inv;
    }
    acc
}

/// Derives `H^q_r(0, 1)` from the evolution of `ℳ = m₋ - m₊`.
///
/// Matching nonnegative powers of `z` in `ℳ_t = (Uℳ)_x` gives, for
/// `p = r, …, 0`, `u_p = (-1)^p [Σ_{i>p} (-1)^i u_i a₋₍₂₍ᵢ₋ₚ₎₋₁₎ + κ_p]`;
/// the `z⁻¹` coefficient gives `a₋₁,ₜ = [Σ (-1)^j u_j a₋₍₂ⱼ₊₁₎]_x`, i.e.
/// `q_t = -2 [Σ (-1)^j u_j a₋₍₂ⱼ₊₁₎]_x`. Constants `κ_p` default to zero.
pub fn hierarchy_from_expansion(tbl: &SymbolicExpansion, idx: HierarchyIndex, kappa: &[DiffPoly]) -> Result<HierarchyEquation> {
    let (r, k) = (idx.r, idx.k);
    if k != 0 {
        return Err(Error::NonlocalStep {
            index: k,
            relation: format!("expansion route implemented for k = 0 only, got k = {k}"),
        });
    }
    let need = 2 * r + 1;
    if tbl.n < need {
        return Err(Error::InsufficientOrder { have: tbl.n, need });
    }
    let sign = |i: usize| if i % 2 == 0 { rat(1, 1) } else { rat(-1, 1) };
    let mut u = vec![DiffPoly::zero(); r + 1];
    u[r] = DiffPoly::one();
    let mut normalizations =
        vec![NormalizationRecord { target: format!("u{r}"), value: "1".into(), note: "leading coefficient".into() }];
    let mut relations = Vec::new();
    for p in (0..r).rev() {
        let mut s = kappa.get(p).cloned().unwrap_or_default();
        normalizations.push(NormalizationRecord {
            target: format!("u{p}"),
            value: s.to_text(),
            note: "constant of the z^(2p+1) relation".into(),
        });
        for i in p + 1..=r {
            s += (&u[i] * tbl.a(-(2 * (i - p) as i64 - 1))).scale(&sign(i));
        }
        u[p] = s.scale(&sign(p));
    }
    for (p, up) in u.iter().enumerate() {
        relations.push(Relation::Explicit { target: u_gen(p), value: up.clone() });
    }
    let mut bracket = DiffPoly::zero();
    for (j, uj) in u.iter().enumerate() {
        bracket += (uj * tbl.a(-(2 * j as i64 + 1))).scale(&sign(j));
    }
    let rhs = bracket.dx().scale(&rat(-2, 1));
    Ok(HierarchyEquation {
        index: idx,
        kind: FlowKind::Q,
        lhs: q_gen().dt(0),
        rhs,
        coefficients: u.into_iter().map(Some).collect(),
        relations,
        normalizations,
        reduced: None,
    })
}

/// Residuals `a₋ⱼ,ₜ - [-a₋ⱼ₋₂ - a₋₁a₋ⱼ]_x` for `j = 1..=j_max` after
/// replacing `q_t` by `rule`.
pub fn conservation_ladder_check(tbl: &SymbolicExpansion, j_max: usize, rule: &DiffPoly) -> Result<Vec<DiffPoly>> {
    if tbl.n < j_max + 2 {
        return Err(Error::InsufficientOrder { have: tbl.n, need: j_max + 2 });
    }
    (1..=j_max as i64)
        .map(|j| {
            let lhs = tbl.a(-j).dt()?.substitute_time(&q_gen(), rule)?;
            let flux = &(-tbl.a(-j - 2)) - &(tbl.a(-1) * tbl.a(-j));
            Ok(&lhs - &flux.dx())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{derive_q_flow, Normalizations};

    fn q() -> DiffPoly {
        q_gen().poly()
    }

    fn qd(n: u32) -> DiffPoly {
        q_gen().deriv(n)
    }

    #[test]
    fn low_order_coefficients() {
        let t = expansion_symbolic(5).unwrap();
        assert_eq!(t.a(1), &DiffPoly::int(-1));
        assert!(t.a(0).is_zero());
        assert_eq!(t.a(-1), &q().scale(&rat(-1, 2)));
        assert_eq!(t.a(-2), &qd(1).scale(&rat(-1, 4)));
        assert_eq!(t.a(-3), &(&q().pow(2) - &qd(2)).scale(&rat(1, 8)));
    }

    #[test]
    fn recovers_q() {
        assert_eq!(expansion_symbolic(3).unwrap().recover_q(), q());
    }

    #[test]
    fn constant_potential_matches_binomial_series() {
        // m+ = -sqrt(z^2 + c) = -z - c/(2z) + c^2/(8z^3) - c^3/(16 z^5) + ...
        let c = 0.7;
        let t = expansion_symbolic(7).unwrap();
        let a = t.at_constant(c);
        let z = Complex64::new(10.0, 0.0);
        let exact = -(z * z + c).sqrt();
        let approx = series_value(&a, z, Side::Plus);
        assert!((exact - approx).norm() < 1e-9);
        assert!((a[4] - c * c / 8.0).abs() < 1e-15);
    }

    #[test]
    fn minus_side_is_plus_side_at_negated_z() {
        let a = expansion_symbolic(6).unwrap().at_constant(0.3);
        let z = Complex64::new(3.0, 1.0);
        let d = series_value(&a, z, Side::Minus) - series_value(&a, -z, Side::Plus);
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn fifth_coefficient() {
        let t = expansion_symbolic(5).unwrap();
        let inner = &(&(&qd(1).pow(2).scale(&rat(5, 2)) + &(&q() * &qd(2)).scale(&rat(3, 1))) - &qd(4).scale(&rat(1, 2)))
            - &q().pow(3);
        assert_eq!(t.a(-5), &inner.scale(&rat(1, 16)));
    }

    #[test]
    fn second_kdv_from_expansion_matches_direct_route() {
        let t = expansion_symbolic(5).unwrap();
        for r in 1..=2 {
            let idx = HierarchyIndex::new(r, 0).unwrap();
            let a = hierarchy_from_expansion(&t, idx, &[]).unwrap();
            let b = derive_q_flow(idx, &DiffPoly::one(), &Normalizations::default()).unwrap();
            assert_eq!(a.zero_form().monic(), b.zero_form().monic(), "r = {r}");
        }
    }

    #[test]
    fn ladder_vanishes() {
        let t = expansion_symbolic(8).unwrap();
        let kdv = &(&q() * &qd(1)).scale(&rat(3, 2)) - &qd(3).scale(&rat(1, 4));
        for (j, res) in conservation_ladder_check(&t, 6, &kdv).unwrap().iter().enumerate() {
            assert!(res.is_zero(), "j = {}: {res}", j + 1);
        }
        // the heat flow is not in the hierarchy
        let bad = conservation_ladder_check(&t, 1, &qd(2)).unwrap();
        assert!(!bad[0].is_zero());
    }

    #[test]
    fn free_operator_series() {
        let a = expansion_symbolic(4).unwrap().at_constant(0.0);
        let z = Complex64::new(10.0, 0.0);
        assert_eq!(series_value(&a, z, Side::Plus), Complex64::new(-10.0, 0.0));
        assert_eq!(series_value(&a, z, Side::Minus), Complex64::new(10.0, 0.0));
    }

    #[test]
    fn branch_of_z() {
        let z = z_of_lambda(Complex64::new(-4.0, 0.0));
        assert!((z - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        let z = z_of_lambda(Complex64::new(1.0, 1e-300));
        assert!(z.re >= 0.0);
        let z = z_of_lambda(Complex64::new(0.3, 2.0));
        assert!(z.re >= 0.0);
    }

    #[test]
    fn kdv_from_expansion() {
        let t = expansion_symbolic(3).unwrap();
        let eq = hierarchy_from_expansion(&t, HierarchyIndex::new(1, 0).unwrap(), &[]).unwrap();
        assert_eq!(eq.to_text(), "q_t = 3/2 q q_x - 1/4 q_xxx");
        assert_eq!(eq.coefficients[0], Some(q().scale(&rat(1, 2))));
    }

    #[test]
    fn transport_from_expansion() {
        let t = expansion_symbolic(1).unwrap();
        let eq = hierarchy_from_expansion(&t, HierarchyIndex::new(0, 0).unwrap(), &[]).unwrap();
        let direct = derive_q_flow(HierarchyIndex::new(0, 0).unwrap(), &DiffPoly::one(), &Normalizations::default())
            .unwrap();
        assert_eq!(eq.zero_form(), direct.zero_form());
        assert_eq!(eq.rhs, qd(1));
    }

    #[test]
    fn order_too_small() {
        let t = expansion_symbolic(4).unwrap();
        let r = hierarchy_from_expansion(&t, HierarchyIndex::new(2, 0).unwrap(), &[]);
        assert!(matches!(r, Err(Error::InsufficientOrder { have: 4, need: 5 })));
        assert!(conservation_ladder_check(&t, 3, &DiffPoly::zero()).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let t = expansion_symbolic(5).unwrap();
        let back = SymbolicExpansion::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn grid_table_agrees_with_symbolic_for_unit_density() {
        let g = Grid::periodic(0.0, 2.0 * std::f64::consts::PI, 128);
        let qv = g.sample(|x| 0.5 * x.sin());
        let y = vec![1.0; 128];
        let tg = expansion_grid(&g, &qv, &y, 5, 0.1).unwrap();
        let ts = expansion_symbolic(5).unwrap();
        for i in [0, 17, 64] {
            let x = g.x(i);
            let env = |f: &crate::diffpoly::Factor| {
                let d = [x.sin(), x.cos(), -x.sin(), -x.cos()][(f.x_order % 4) as usize];
                0.5 * d
            };
            for j in -5..=1 {
                let v: f64 = ts.a(j).eval(env);
                assert!((v - tg.a(j)[i]).abs() < 1e-10, "a_{j} at {i}");
            }
        }
    }
}
