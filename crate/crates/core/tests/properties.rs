use num_complex::Complex64;
use proptest::prelude::*;

use slh_core::diffpoly::{formal_integrate, rat};
use slh_core::expansion::Side;
use slh_core::grid::Grid;
use slh_core::hierarchy::{q_gen, y_gen};
use slh_core::pair::{Expr, PotentialPair};
use slh_core::scattering::{scattering_data, DecayingPair};
use slh_core::weyl::{riccati_m, riccati_residual, RiccatiOptions, WeylField};
use slh_core::DiffPoly;

/// Sums of `c · Π g^(d)` over q and y with small orders.
fn poly() -> impl Strategy<Value = DiffPoly> {
    let term = (-6i64..=6, 1i64..=4, prop::collection::vec((0u8..2, 0u32..4), 0..4));
    prop::collection::vec(term, 0..5).prop_map(|terms| {
        let mut p = DiffPoly::zero();
        for (n, d, factors) in terms {
            let mut t = DiffPoly::constant(rat(n, d));
            for (g, order) in factors {
                let f = if g == 0 { q_gen().deriv(order) } else { y_gen().deriv(order) };
                t = &t * &f;
            }
            p = &p + &t;
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &DiffPoly::one(), a.clone());
    }

    #[test]
    fn leibniz_rule(a in poly(), b in poly()) {
        prop_assert_eq!((&a * &b).dx(), &(&a.dx() * &b) + &(&a * &b.dx()));
        prop_assert_eq!(a.dx_n(2), a.dx().dx());
    }

    #[test]
    fn integration_inverts_differentiation(a in poly()) {
        let d = a.dx();
        let back = formal_integrate(&d).unwrap();
        prop_assert_eq!(back.dx(), d);
    }

    #[test]
    fn normal_form_is_canonical(a in poly(), b in poly()) {
        // the same polynomial built in two orders is stored identically
        let lhs = &(&a + &b) - &b;
        prop_assert_eq!(&lhs, &a);
        if let Some(c) = a.monic().leading_coefficient() {
            prop_assert_eq!(c, &rat(1, 1));
        }
    }
}

fn bump_pair(amp: f64, width: f64, yamp: f64) -> PotentialPair {
    let q = Expr::sum(vec![Expr::constant(1.0), Expr::GaussBump { amp, width, center: 0.2 }]);
    let y = Expr::sum(vec![Expr::constant(1.0), Expr::GaussBump { amp: yamp, width: 1.0, center: -0.3 }]);
    PotentialPair::new(q, y, 0.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weyl_functions_solve_riccati_and_are_herglotz(
        amp in -0.8f64..0.8, width in 0.5f64..2.0, yamp in -0.4f64..0.6,
        re in -3.0f64..6.0, im in 0.2f64..3.0, flip in any::<bool>(),
    ) {
        let pair = bump_pair(amp, width, yamp);
        let grid = Grid::line(-4.0, 4.0, 401);
        let xs = grid.points();
        let lam = Complex64::new(re, if flip { -im } else { im });
        let opts = RiccatiOptions { margin: 16.0, ..Default::default() };
        let (q, y) = pair.sample(&grid);
        for side in [Side::Plus, Side::Minus] {
            let m = riccati_m(&pair, &xs, lam, side, &opts).unwrap();
            let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
            prop_assert!(riccati_residual(&grid, &m, &q, &y, lam) < 1e-5 * scale);
        }
        let field = WeylField::compute(&pair, &xs[..10], &[lam], &opts).unwrap();
        prop_assert!(field.herglotz_violations().is_empty());
        for row in field.derived(&y[..10]).r {
            for v in row {
                prop_assert!(v.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn scattering_is_unitary(amp in -0.9f64..0.9, width in 0.4f64..1.5, yamp in -0.3f64..0.5) {
        let dp = DecayingPair::new(bump_pair(amp, width, yamp), 1.0, -20.0, 20.0).unwrap();
        let ks = [0.2, 0.7, 1.5, 3.0];
        let s = scattering_data(&dp, &ks, 1e-8).unwrap();
        prop_assert!(s.unitarity_residual() < 1e-8);
        prop_assert!(s.conjugation_residual() < 1e-8);
        for i in 0..ks.len() {
            prop_assert!(s.r_plus[i].norm() <= 1.0 + 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn poles_stay_on_their_cycle(
        l0 in 0.2f64..1.0, gap_start in 0.1f64..1.0, gap_len in 0.2f64..2.0,
        frac in 0.0f64..1.0, up in any::<bool>(), m0 in 0.5f64..3.0,
    ) {
        use slh_core::algebro::{genus_one_period, measured_period, pole_motion_x, M0Spec, PoleConfiguration, SpectralCurve};
        use slh_core::ode::Dopri5;
        let (a, b) = (l0 + gap_start, l0 + gap_start + gap_len);
        let curve = SpectralCurve::new(vec![l0, a, b]).unwrap();
        let init = PoleConfiguration { positions: vec![a + frac * (b - a)], sheets: vec![if up { 1 } else { -1 }] };
        let ode = Dopri5::with_tol(1e-11, 1e-13);
        let xs: Vec<f64> = (1..=400).map(|i| 0.02 * i as f64).collect();
        let tr = pole_motion_x(&curve, &M0Spec::constant(m0), &init, 0.0, &xs, &ode).unwrap();
        prop_assert!(tr.confined(&curve));
        prop_assert!(tr.max_excursion < 1e-6);
        for i in 0..xs.len() {
            prop_assert!((tr.w[i][0].powi(2) - curve.radicand(tr.p[i][0])).abs() < 1e-12);
        }
        let period = genus_one_period(&curve, m0).unwrap();
        let measured = measured_period(&curve, &M0Spec::constant(m0), &init, 3.0 * period, &ode).unwrap();
        prop_assert!((period - measured).abs() < 1e-6 * period);
    }
}
