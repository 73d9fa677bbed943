//! Plain-text, LaTeX and canonical JSON renderings.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{DiffPoly, Factor, Generator, Monomial, Rational};
use crate::error::{Error, Result};

/// `[name, x_order, t_order]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorJson(pub String, pub u32, pub u8);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialJson {
    pub coef: String,
    pub factors: Vec<FactorJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffPolyJson {
    pub monomials: Vec<MonomialJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<String>,
}

fn rational_text(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad rational coefficient {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

fn factor_text(f: &Factor) -> String {
    let mut s = f.generator.name().to_string();
    if f.x_order > 0 || f.t_order > 0 {
        s.push('_');
        s.extend(std::iter::repeat_n('x', f.x_order as usize));
        s.extend(std::iter::repeat_n('t', f.t_order as usize));
    }
    s
}

/// Splits `u12` into (`u`, `12`) and maps Greek names to macros.
fn latex_base(name: &str) -> (String, Option<String>) {
    let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (stem, idx) = name.split_at(split);
    const GREEK: [&str; 12] =
        ["alpha", "beta", "gamma", "delta", "eta", "kappa", "lambda", "mu", "omega", "rho", "sigma", "tau"];
    let stem = if GREEK.contains(&stem) { format!("\\{stem}") } else { stem.to_string() };
    let idx = (!idx.is_empty() && split > 0).then(|| idx.to_string());
    (stem, idx)
}

fn factor_latex(f: &Factor) -> String {
    let (stem, idx) = latex_base(f.generator.name());
    let mut derivs = String::new();
    derivs.extend(std::iter::repeat_n('x', f.x_order as usize));
    derivs.extend(std::iter::repeat_n('t', f.t_order as usize));
    match (idx, derivs.is_empty()) {
        (None, true) => stem,
        (None, false) => format!("{stem}_{{{derivs}}}"),
        (Some(i), true) => format!("{stem}_{{{i}}}"),
        (Some(i), false) => format!("{stem}_{{{i},{derivs}}}"),
    }
}

fn monomial_body(m: &Monomial, latex: bool) -> String {
    let parts: Vec<String> = m
        .factors()
        .iter()
        .map(|(f, e)| {
            let base = if latex { factor_latex(f) } else { factor_text(f) };
            match (*e, latex) {
                (1, _) => base,
                (e, false) => format!("{base}^{e}"),
                (e, true) if f.x_order > 0 || f.t_order > 0 => format!("\\left({base}\\right)^{{{e}}}"),
                (e, true) => format!("{base}^{{{e}}}"),
            }
        })
        .collect();
    parts.join(" ")
}

fn coef_latex(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

impl DiffPoly {
    fn render(&self, latex: bool) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let body = monomial_body(m, latex);
            let coef = if latex { coef_latex(&a) } else { rational_text(&a) };
            if body.is_empty() {
                out.push_str(&coef);
            } else if a.is_one() {
                out.push_str(&body);
            } else {
                out.push_str(&coef);
                out.push(' ');
                out.push_str(&body);
            }
        }
        out
    }

    /// Plain text, e.g. `3/2 q q_x - 1/4 q_xxx`.
    pub fn to_text(&self) -> String {
        self.render(false)
    }

    /// LaTeX, e.g. `\frac{3}{2} q q_{x} - \frac{1}{4} q_{xxx}`.
    pub fn to_latex(&self) -> String {
        self.render(true)
    }

    pub fn to_json_value(&self) -> DiffPolyJson {
        let mut constants = BTreeSet::new();
        let monomials = self
            .terms
            .iter()
            .map(|(m, c)| MonomialJson {
                coef: rational_text(c),
                factors: m
                    .flat()
                    .map(|f| {
                        if f.generator.is_constant() {
                            constants.insert(f.generator.name().to_string());
                        }
                        FactorJson(f.generator.name().to_string(), f.x_order, f.t_order)
                    })
                    .collect(),
            })
            .collect();
        DiffPolyJson { monomials, constants: constants.into_iter().collect() }
    }

    pub fn from_json_value(v: &DiffPolyJson) -> Result<DiffPoly> {
        let constants: BTreeSet<&str> = v.constants.iter().map(String::as_str).collect();
        let mut p = DiffPoly::zero();
        for m in &v.monomials {
            let c = parse_rational(&m.coef)?;
            let factors = m.factors.iter().map(|FactorJson(name, x, t)| {
                if *t > 1 {
                    return Err(Error::TimeOrderExceeded { generator: name.clone() });
                }
                let g = if constants.contains(name.as_str()) {
                    Generator::constant(name)
                } else {
                    Generator::function(name)
                };
                Ok(Factor::new(g, *x, *t))
            });
            let factors: Vec<Factor> = factors.collect::<Result<_>>()?;
            if let Some(mono) = Monomial::from_factors(factors) {
                p.add_term(mono, c);
            }
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<DiffPoly> {
        let v: DiffPolyJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json_value(&v)
    }
}
