use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Value};
use slh_core::algebro::{genus_one_period, measured_period, pole_motion_x, trace_formulas, weyl_from_poles, M0Spec, PoleConfiguration, SpectralCurve};
use slh_core::evolve::{evolve, isospectrality_report, kdv_soliton, spectral_snapshot, EvolveOptions, FlowState};
use slh_core::expansion::{conservation_ladder_check, expansion_grid, expansion_symbolic, Side, SymbolicExpansion};
use slh_core::grid::{max_abs_diff, Grid};
use slh_core::hierarchy::{derive_q_flow, derive_y_flow, q_gen, stationary_check, HierarchyIndex, Normalizations};
use slh_core::ode::Dopri5;
use slh_core::pair::{PairFile, PotentialPair};
use slh_core::scattering::{jost, scattering_data, DecayingPair};
use slh_core::weyl::{recover_q_from_m0, riccati_m, RiccatiOptions, WeylField};
use slh_core::{acceptance, DiffPoly, Error, Rational, Result};

use crate::args::*;
use crate::output::Output;

const ZC_LAMBDAS: [(f64, f64); 5] = [(-2.0, 0.0), (-1.0, 1.0), (0.0, 1.0), (0.0, 2.0), (3.0, 0.0)];

pub fn run(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Derive(a) => derive(a),
        Command::Expand(a) => expand(a),
        Command::Ladder(a) => ladder(a),
        Command::Weyl(a) => weyl(a),
        Command::RecoverQ(a) => recover(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Algebro(a) => algebro(a),
        Command::Scatter(a) => scatter(a),
        Command::Jost(a) => jost_cmd(a),
        Command::ZcResidual(a) => zc(a),
        Command::CheckStationary(a) => stationary(a),
        Command::Verify(a) => verify(a),
        Command::Export(a) => export(a),
    }
}

fn config(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_rational(s: &str) -> Result<Rational> {
    Rational::from_str(s.trim()).map_err(|_| config(format!("not a rational number: {s}")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| config(format!("not a number: {s}")))
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse_f64(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?)),
        _ => Err(config(format!("expected re,im: {s}"))),
    }
}

/// `a:b:n`.
pub fn parse_grid(s: &str, periodic: bool) -> Result<Grid> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(config(format!("grid must be a:b:n, got {s}")));
    };
    let (a, b) = (parse_f64(a)?, parse_f64(b)?);
    let n: usize = n.trim().parse().map_err(|_| config(format!("bad point count in {s}")))?;
    if !(b > a) || n < 2 {
        return Err(config(format!("grid {s} needs a < b and n >= 2")));
    }
    Ok(if periodic { Grid::periodic(a, b, n) } else { Grid::line(a, b, n) })
}

fn linspace(s: &str) -> Result<Vec<f64>> {
    let g = parse_grid(s, false)?;
    Ok(g.points())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))
}

fn load_pair_file(path: &Path) -> Result<PairFile> {
    PairFile::parse(&read(path)?)
}

fn load_pair(p: &PairArgs, default_grid: Option<(&str, bool)>) -> Result<(PotentialPair, Grid)> {
    let grid = match (&p.grid, default_grid) {
        (Some(g), _) => parse_grid(g, p.periodic)?,
        (None, Some((g, per))) => parse_grid(g, per)?,
        (None, None) => return Err(config("--grid is required")),
    };
    let path = p.pair.as_ref().ok_or_else(|| config("--pair is required"))?;
    let pair = load_pair_file(path)?.to_pair(Some(&grid))?;
    Ok((pair, grid))
}

fn e(v: f64) -> String {
    format!("{v:.16e}")
}

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn derive(a: &DeriveArgs) -> Result<Output> {
    let (name, value) = a.fix.split_once('=').ok_or_else(|| config("--fix must be y=<c> or q=<c>"))?;
    let fixed = DiffPoly::constant(parse_rational(value)?);
    let idx = HierarchyIndex::new(a.r, a.k)?;
    let mut norm = Normalizations::default();
    for c in &a.constants {
        let (j, v) = c.split_once('=').ok_or_else(|| config("--constant must be j=<c>"))?;
        let j: usize = j.trim().parse().map_err(|_| config(format!("bad index in {c}")))?;
        norm = norm.with_constant(j, DiffPoly::constant(parse_rational(v)?));
    }
    if a.closed_form {
        norm = norm.closed_form();
    }
    let eq = match name.trim() {
        "y" => derive_q_flow(idx, &fixed, &norm)?,
        "q" => derive_y_flow(idx, &fixed, &norm)?,
        other => return Err(config(format!("cannot fix {other}; use y or q"))),
    };
    let mut text = eq.to_text();
    text.push('\n');
    for line in eq.system_text() {
        let _ = writeln!(text, "  {line}");
    }
    let json = json!({
        "equation": eq.to_text(),
        "lhs": eq.lhs.to_json_value(),
        "rhs": eq.rhs.to_json_value(),
        "system": eq.system_text(),
        "normalizations": eq.normalizations,
        "reduced": eq.reduced.as_ref().map(|p| p.to_text()),
    });
    Ok(Output::new(text, json).with_latex(eq.system_latex()))
}

fn expansion_output(t: &SymbolicExpansion) -> Result<Output> {
    let mut text = String::new();
    let mut latex = String::from("\\begin{aligned}\n");
    for j in (-(t.n as i64)..=1).rev() {
        let _ = writeln!(text, "a_{j} = {}", t.a(j));
        let _ = writeln!(latex, "a_{{{j}}} &= {} \\\\", t.a(j).to_latex());
    }
    latex.push_str("\\end{aligned}");
    let json: Value = serde_json::from_str(&t.to_json()).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(Output::new(text, json).with_latex(latex))
}

fn expand(a: &ExpandArgs) -> Result<Output> {
    if a.symbolic {
        if let Some(f) = &a.fix {
            let (name, v) = f.split_once('=').ok_or_else(|| config("--fix must be y=1"))?;
            if name.trim() != "y" || parse_rational(v)? != Rational::from_integer(1.into()) {
                return Err(config("the symbolic table is built for y = 1"));
            }
        }
        return expansion_output(&expansion_symbolic(a.n)?);
    }
    let (pair, grid) = load_pair(&a.pair, None)?;
    let (q, y) = pair.sample(&grid);
    let t = expansion_grid(&grid, &q, &y, a.n, pair.delta)?;
    let js: Vec<i64> = (-(a.n as i64)..=1).rev().collect();
    let mut csv = String::from("x");
    for j in &js {
        let _ = write!(csv, ",a_{j}");
    }
    csv.push('\n');
    for i in 0..grid.n {
        csv.push_str(&e(grid.x(i)));
        for j in &js {
            let _ = write!(csv, ",{}", e(t.a(*j)[i]));
        }
        csv.push('\n');
    }
    let json = json!({ "x": grid.points(), "coefficients": js.iter().map(|j| json!({"index": j, "values": t.a(*j)})).collect::<Vec<_>>() });
    Ok(Output::new(csv.clone(), json).with_csv(csv))
}

fn ladder(a: &LadderArgs) -> Result<Output> {
    let t = expansion_symbolic(a.j_max + 2)?;
    let q = q_gen();
    let rule = &(&q.poly() * &q.deriv(1)).scale(&slh_core::diffpoly::rat(3, 2)) - &q.deriv(3).scale(&slh_core::diffpoly::rat(1, 4));
    let res = conservation_ladder_check(&t, a.j_max, &rule)?;
    let mut text = String::new();
    for (j, r) in res.iter().enumerate() {
        let _ = writeln!(text, "j = {}: {}", j + 1, if r.is_zero() { "0".to_string() } else { r.to_text() });
    }
    let failed = res.iter().any(|r| !r.is_zero());
    let json = json!({ "rule": rule.to_text(), "residuals": res.iter().map(|r| r.to_text()).collect::<Vec<_>>(), "all_zero": !failed });
    let mut out = Output::new(text, json);
    out.failed = failed;
    Ok(out)
}

fn riccati_defaults(out: Output, margin: f64) -> Output {
    let o = RiccatiOptions::default();
    out.with_default("riccati_margin", margin).with_default("riccati_tail_tol", o.tail_tol).with_default("riccati_check_tail", o.check_tail)
}

fn weyl(a: &WeylArgs) -> Result<Output> {
    let (pair, grid) = load_pair(&a.pair, None)?;
    let lambdas = a.lambdas.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
    let opts = RiccatiOptions { margin: a.margin, ..Default::default() };
    let f = WeylField::compute(&pair, &grid.points(), &lambdas, &opts)?;
    let bad = f.herglotz_violations();
    let mut text = String::new();
    let mid = grid.n / 2;
    for (l, lam) in lambdas.iter().enumerate() {
        let _ = writeln!(text, "lambda = {lam}: m+({}) = {}, m-({}) = {}", grid.x(mid), f.m_plus[l][mid], grid.x(mid), f.m_minus[l][mid]);
    }
    let _ = writeln!(text, "herglotz violations: {}", bad.len());
    let json = json!({
        "x": f.x,
        "lambdas": lambdas.iter().map(|z| cjson(*z)).collect::<Vec<_>>(),
        "m_plus": f.m_plus.iter().map(|r| r.iter().map(|z| cjson(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "m_minus": f.m_minus.iter().map(|r| r.iter().map(|z| cjson(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "herglotz_violations": bad.len(),
    });
    let mut out = riccati_defaults(Output::new(text, json).with_csv(f.to_csv()), a.margin);
    out.failed = !bad.is_empty();
    Ok(out)
}

fn recover(a: &RecoverArgs) -> Result<Output> {
    let (pair, grid) = load_pair(&a.pair, None)?;
    let xs = grid.points();
    let lam = Complex64::new(a.shift, 0.0);
    let opts = RiccatiOptions { margin: a.margin, ..Default::default() };
    let mp = riccati_m(&pair, &xs, lam, Side::Plus, &opts)?;
    let mm = riccati_m(&pair, &xs, lam, Side::Minus, &opts)?;
    let m0: Vec<f64> = mp.iter().zip(&mm).map(|(p, m)| (m - p).re).collect();
    let (q, y) = pair.sample(&grid);
    let rec = recover_q_from_m0(&grid, &m0, Some(&y), a.shift)?;
    let err = max_abs_diff(&rec[3..grid.n - 3], &q[3..grid.n - 3]);
    let mut csv = String::from("x,M,q,q_recovered\n");
    for i in 0..grid.n {
        let _ = writeln!(csv, "{},{},{},{}", e(xs[i]), e(m0[i]), e(q[i]), e(rec[i]));
    }
    let text = format!("max |q - q_recovered| (interior) = {err:.3e}\n");
    let json = json!({ "x": xs, "M": m0, "q_recovered": rec, "max_error": err });
    Ok(riccati_defaults(Output::new(text, json).with_csv(csv), a.margin))
}

fn initial_state(flow: FlowChoice, kappa: f64, omega0: f64, p: &PairArgs) -> Result<FlowState> {
    let grid = match &p.grid {
        Some(g) => parse_grid(g, true)?,
        None => Grid::periodic(-30.0, 30.0, 512),
    };
    match (flow, &p.pair) {
        (FlowChoice::Kdv, None) => {
            let s = kdv_soliton(kappa, 0.0, 0.0);
            let q = grid.sample(|x| s.eval(x));
            FlowState::kdv(grid, q)
        }
        (FlowChoice::Kdv, Some(path)) => {
            let pair = load_pair_file(path)?.to_pair(Some(&grid))?;
            let q = pair.q.sample(&grid);
            FlowState::kdv(grid, q)
        }
        (FlowChoice::Ch, None) => {
            let u0 = grid.sample(|x| 0.3 * (-x * x / 2.0).exp());
            FlowState::ch_from_velocity(grid, &u0, omega0, 0.1)
        }
        (FlowChoice::Ch, Some(path)) => {
            let pair = load_pair_file(path)?.to_pair(Some(&grid))?;
            let y = pair.y.sample(&grid);
            FlowState::ch(grid, y, omega0, pair.delta)
        }
    }
}

fn zc_lambdas(given: &[String]) -> Result<Vec<Complex64>> {
    if given.is_empty() {
        Ok(ZC_LAMBDAS.iter().map(|(a, b)| Complex64::new(*a, *b)).collect())
    } else {
        given.iter().map(|s| parse_complex(s)).collect()
    }
}

fn evolve_cmd(a: &EvolveArgs) -> Result<Output> {
    let st = initial_state(a.flow, a.kappa, a.omega0, &a.pair)?;
    let opts = EvolveOptions { dt: a.dt, t_end: a.t_end, snapshots: a.snapshots, ..Default::default() };
    let tr = evolve(st, &opts)?;
    let lams = zc_lambdas(&[])?;
    let snaps = tr.frames.iter().map(|f| spectral_snapshot(f, a.eigenvalues, &lams, opts.dt.min(1e-3))).collect::<Result<Vec<_>>>()?;
    let rep = if snaps.len() >= 3 { Some(isospectrality_report(&snaps)?) } else { None };
    let grid = &tr.frames[0].grid;
    let mut csv = String::from("x");
    for f in &tr.frames {
        let _ = write!(csv, ",t={}", f.t);
    }
    csv.push('\n');
    for i in 0..grid.n {
        csv.push_str(&e(grid.x(i)));
        for f in &tr.frames {
            let _ = write!(csv, ",{}", e(f.field()[i]));
        }
        csv.push('\n');
    }
    let mut text = String::new();
    let _ = writeln!(text, "frames: {}, final dt: {}", tr.frames.len(), tr.dt);
    match &rep {
        Some(rep) => {
            let _ = writeln!(text, "initial eigenvalues: {:?}", rep.initial);
            let _ = writeln!(text, "max eigenvalue drift: {:.3e}", rep.max_drift);
            let _ = writeln!(text, "max zero-curvature residual: {:.3e}", rep.max_residual);
        }
        None => {
            let _ = writeln!(text, "isospectrality report needs at least 3 frames");
        }
    }
    let json = json!({ "report": rep, "snapshots": snaps, "dt": tr.dt });
    Ok(Output::new(text, json)
        .with_csv(csv)
        .with_default("max_halvings", opts.max_halvings)
        .with_default("zc_lambdas", ZC_LAMBDAS.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>())
        .with_default("ch_delta", 0.1))
}

fn algebro(a: &AlgebroArgs) -> Result<Output> {
    let curve = SpectralCurve::new(a.branch.clone())?;
    let m0 = if a.m0.trim() == "schrodinger" { M0Spec::Schrodinger } else { M0Spec::constant(parse_f64(&a.m0)?) };
    let sheets = if a.sheets.is_empty() { vec![1; a.poles.len()] } else { a.sheets.clone() };
    let init = PoleConfiguration { positions: a.poles.clone(), sheets };
    let grid = parse_grid(&a.grid, false)?;
    let ode = Dopri5::with_tol(1e-12, 1e-14);
    let x0 = if grid.x(0) <= 0.0 && grid.x(grid.n - 1) >= 0.0 { 0.0 } else { grid.x(0) };
    let tr = pole_motion_x(&curve, &m0, &init, x0, &grid.points(), &ode)?;
    let (q, y) = trace_formulas(&curve, &tr, &grid, 1e-3)?;
    let g = curve.genus();
    let weyl = match &a.lambda {
        Some(s) => Some(weyl_from_poles(&curve, &tr, parse_complex(s)?)?),
        None => None,
    };
    let mut csv = String::from("x");
    for j in 1..=g {
        let _ = write!(csv, ",P{j},w{j}");
    }
    csv.push_str(",q,y");
    if weyl.is_some() {
        csv.push_str(",mp_re,mp_im,mm_re,mm_im");
    }
    csv.push('\n');
    for i in 0..grid.n {
        csv.push_str(&e(grid.x(i)));
        for j in 0..g {
            let _ = write!(csv, ",{},{}", e(tr.p[i][j]), e(tr.w[i][j]));
        }
        let _ = write!(csv, ",{},{}", e(q[i]), e(y[i]));
        if let Some((mp, mm)) = &weyl {
            let _ = write!(csv, ",{},{},{},{}", e(mp[i].re), e(mp[i].im), e(mm[i].re), e(mm[i].im));
        }
        csv.push('\n');
    }
    let mut text = String::new();
    let confined = tr.confined(&curve);
    let _ = writeln!(text, "genus {g}, k(0) = {}", curve.k0());
    let _ = writeln!(text, "poles confined: {confined}, max excursion before projection: {:.3e}", tr.max_excursion);
    let mut period = Value::Null;
    if let (1, M0Spec::Given(_)) = (g, &m0) {
        let c = parse_f64(&a.m0)?;
        let oracle = genus_one_period(&curve, c)?;
        let measured = measured_period(&curve, &m0, &init, 3.0 * oracle, &ode)?;
        let _ = writeln!(text, "period: quadrature {oracle:.12}, measured {measured:.12}");
        period = json!({ "quadrature": oracle, "measured": measured });
    }
    let json = json!({
        "x": grid.points(), "p": tr.p, "w": tr.w, "q": q, "y": y,
        "confined": confined, "max_excursion": tr.max_excursion, "period": period,
    });
    let mut out = Output::new(text, json).with_csv(csv).with_default("ode_rtol", 1e-12).with_default("ode_atol", 1e-14).with_default("x0", x0);
    out.failed = !confined;
    Ok(out)
}

fn decaying(path: &Path, x_min: f64, x_max: f64) -> Result<DecayingPair> {
    let f = load_pair_file(path)?;
    let l0 = f.lambda0.ok_or_else(|| config("the pair file needs lambda0 for scattering"))?;
    DecayingPair::new(f.to_pair(None)?, l0, x_min, x_max)
}

fn scatter(a: &ScatterArgs) -> Result<Output> {
    let dp = decaying(&a.pair, a.x_min, a.x_max)?;
    let ks = linspace(&a.k)?;
    let s = scattering_data(&dp, &ks, a.drift_tol)?;
    let (u, c) = (s.unitarity_residual(), s.conjugation_residual());
    let rmax = s.r_plus.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let text = format!("unitarity residual {u:.3e}\nconjugation residual {c:.3e}\nmax |r| {rmax:.6}\nwronskian drift {:.3e}\n", s.wronskian_drift);
    let json = json!({ "data": s, "unitarity_residual": u, "conjugation_residual": c });
    Ok(Output::new(text, json).with_csv(s.to_csv()).with_default("ode_rtol", 1e-12).with_default("ode_atol", 1e-14))
}

fn jost_cmd(a: &JostArgs) -> Result<Output> {
    let dp = decaying(&a.pair, a.x_min, a.x_max)?;
    let k = parse_complex(&a.k)?;
    let side = match a.side {
        SideChoice::Plus => Side::Plus,
        SideChoice::Minus => Side::Minus,
    };
    let xs = if a.x.is_empty() { vec![0.0] } else { a.x.clone() };
    let j = jost(&dp, k, side, &xs)?;
    let mut csv = String::from("x,psi_re,psi_im,dpsi_re,dpsi_im\n");
    let mut text = String::new();
    for i in 0..xs.len() {
        let _ = writeln!(csv, "{},{},{},{},{}", e(xs[i]), e(j.psi[i].re), e(j.psi[i].im), e(j.dpsi[i].re), e(j.dpsi[i].im));
        let _ = writeln!(text, "x = {}: psi = {}, psi_x = {}", xs[i], j.psi[i], j.dpsi[i]);
    }
    let json = json!({ "x": xs, "psi": j.psi.iter().map(|z| cjson(*z)).collect::<Vec<_>>(), "dpsi": j.dpsi.iter().map(|z| cjson(*z)).collect::<Vec<_>>() });
    Ok(Output::new(text, json).with_csv(csv))
}

fn zc(a: &ZcArgs) -> Result<Output> {
    let st = initial_state(a.flow, a.kappa, a.omega0, &a.pair)?;
    let lams = zc_lambdas(&a.lambdas)?;
    let s = spectral_snapshot(&st, 1, &lams, a.h)?;
    let mut text = String::new();
    let mut csv = String::from("lambda_re,lambda_im,residual\n");
    for (l, r) in lams.iter().zip(&s.zc_residuals) {
        let _ = writeln!(text, "lambda = {l}: residual {r:.3e}");
        let _ = writeln!(csv, "{},{},{}", e(l.re), e(l.im), e(*r));
    }
    let json = json!({ "lambdas": s.lambdas, "residuals": s.zc_residuals });
    Ok(Output::new(text, json).with_csv(csv).with_default("stencil", "5-point centered in t"))
}

fn stationary(a: &StationaryArgs) -> Result<Output> {
    let (pair, grid) = load_pair(&a.pair, None)?;
    if !grid.periodic {
        return Err(config("check-stationary needs --periodic"));
    }
    let y = pair.y.sample(&grid);
    let rep = stationary_check(&grid, &y, a.lambda0, HierarchyIndex::new(a.r, a.k)?, pair.delta)?;
    let text = format!("equation residuals {:?}\nflow residual {:.3e}\nmax residual {:.3e}\n", rep.equation_residuals, rep.flow_residual, rep.max_residual);
    Ok(Output::new(text, serde_json::to_value(&rep).unwrap_or(Value::Null)))
}

fn verify(a: &VerifyArgs) -> Result<Output> {
    let results = if a.suite == "all" {
        acceptance::run_all()
    } else {
        let id: u8 = a.suite.parse().map_err(|_| config(format!("unknown suite {}", a.suite)))?;
        if !(1..=10).contains(&id) {
            return Err(config(format!("no criterion {id}")));
        }
        vec![acceptance::run(id)]
    };
    let text: String = results.iter().map(|r| format!("{r}\n")).collect();
    let passed = results.iter().filter(|r| r.passed).count();
    let json = json!({ "passed": passed, "total": results.len(), "criteria": results });
    let mut out = Output::new(text, json);
    out.failed = passed != results.len();
    out.fail_code = Some(4);
    Ok(out)
}

fn export(a: &ExportArgs) -> Result<Output> {
    let src = read(&a.input)?;
    match a.object {
        ObjectKind::Diffpoly => {
            let p = DiffPoly::from_json(&src)?;
            Ok(Output::new(p.to_text(), serde_json::to_value(p.to_json_value()).unwrap_or(Value::Null)).with_latex(p.to_latex()))
        }
        ObjectKind::Expansion => expansion_output(&SymbolicExpansion::from_json(&src)?),
        ObjectKind::Pair => {
            let f = PairFile::parse(&src)?;
            let text = format!("q: {:?}\ny: {:?}\ndelta: {}\nlambda0: {:?}\n", f.q, f.y, f.delta, f.lambda0);
            Ok(Output::new(text, serde_json::to_value(&f).unwrap_or(Value::Null)))
        }
    }
}
