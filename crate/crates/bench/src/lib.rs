//! Shared fixtures for the benchmarks.

use slh_core::grid::Grid;
use slh_core::pair::{Expr, PotentialPair};

/// A reflectionless well on a unit background.
pub fn sech_pair() -> PotentialPair {
    let q = Expr::sum(vec![Expr::constant(1.0), Expr::Sech2 { amp: -2.0, kappa: 1.0, center: 0.0 }]);
    let mut p = PotentialPair::new(q, Expr::constant(1.0), 0.5);
    p.lambda0 = Some(1.0);
    p
}

/// A one-soliton KdV profile on the periodic box used by the evolution benchmarks.
pub fn soliton_profile(n: usize) -> (Grid, Vec<f64>) {
    let grid = Grid::periodic(-30.0, 30.0, n);
    let s = slh_core::evolve::kdv_soliton(1.0, 0.0, 0.0);
    let q = grid.sample(|x| s.eval(x));
    (grid, q)
}
