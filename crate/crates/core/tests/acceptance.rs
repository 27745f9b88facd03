//! One PASS/FAIL line per acceptance criterion, with failing rows listed underneath.
//! Exits with status 1 when any criterion fails.

use std::time::{Duration, Instant};

use rectherz::experiments::output::rows_csv;
use rectherz::experiments::{corpus, opnorm_formula, run_named, ExperimentConfig, ExperimentReport, OpKind, Row, WeightSpec};
use rectherz::funcs::rect_integral_abs_p;
use rectherz::norms::{bp_rect_norm, cmo_norm, cmo_star_norm, NormParams};
use rectherz::operators::{apply_continuous, apply_discrete, ContinuousWeight, DiscreteWeight};
use rectherz::oracle::{riemann_integral, Budget, GridSpec};
use rectherz::{Error, FunctionSpec, Rect};

const ORACLE_EXACT: f64 = 1e-12;
const PROPERTY_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome { pass, summary: summary.into(), details: Vec::new() }
    }

    fn detail(mut self, lines: impl IntoIterator<Item = String>) -> Self {
        self.details.extend(lines);
        self
    }
}

fn describe(r: &Row) -> String {
    format!("{} {} formula={} empirical={} error={:e} ratio={}", r.case, r.param, r.formula, r.empirical, r.error, r.ratio)
}

fn failures<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Vec<String> {
    rows.into_iter().filter(|r| !r.pass).map(describe).collect()
}

fn timed(name: &str) -> (ExperimentReport, Duration) {
    let t = Instant::now();
    let rep = run_named(name, &ExperimentConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
    (rep, t.elapsed())
}

fn within(elapsed: Duration, secs: u64) -> (bool, String) {
    (elapsed <= Duration::from_secs(secs), format!("{:.2}s of {secs}s", elapsed.as_secs_f64()))
}

fn report_outcome(rep: &ExperimentReport, elapsed: Duration, limit: u64, extra: &str) -> Outcome {
    let (fast, time) = within(elapsed, limit);
    let failed = rep.failed_rows().count();
    Outcome::new(rep.pass && fast, format!("{} rows, {failed} failed, {time}{extra}", rep.rows.len()))
        .detail(failures(&rep.rows))
        .detail(rep.errors.iter().map(|e| format!("excluded {}: {}", e.member, e.message)))
}

fn inclusion_gap() -> Outcome {
    let (rep, t) = timed("inclusion_gap");
    let rect = rep.rows.iter().filter(|r| r.case == "rect_exact").count();
    let ball = rep.rows.iter().filter(|r| r.case == "ball").count();
    let max_ball = rep.rows.iter().filter(|r| r.case == "ball").map(|r| r.empirical).fold(0.0, f64::max);
    let mut o = report_outcome(&rep, t, 10, &format!("; {rect} rectangles, {ball} radii, largest ball average {max_ball:.6}"));
    o.pass &= rect == 32 && ball > 0;
    o
}

fn dyadic_equivalence() -> Outcome {
    let (rep, t) = timed("dyadic_equivalence");
    let chains = rep.rows.iter().filter(|r| r.case == "chain_constant").count();
    let sizes = [corpus(1).len(), corpus(2).len()];
    let mut o = report_outcome(&rep, t, 60, &format!("; corpus sizes {sizes:?}, {chains} chain constants"));
    o.pass &= chains == 4 && sizes == [10, 10];
    o
}

fn discrete_lp() -> Outcome {
    let (rep, t) = timed("discrete_lp");
    report_outcome(&rep, t, 30, "")
}

fn hardy() -> Outcome {
    let (rep, t) = timed("hardy_sharpness");
    let best = rep.rows.iter().filter(|r| r.case == "threshold").map(|r| r.empirical).fold(0.0, f64::max);
    report_outcome(&rep, t, 30, &format!("; ratio {best:.6} at the smallest eps"))
}

fn attainment_rows<'a>(rep: &'a ExperimentReport, prefix: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
    rep.rows.iter().filter(move |r| r.case.starts_with(prefix))
}

fn grid_attainment(rep: &ExperimentReport) -> Outcome {
    let rows: Vec<&Row> = attainment_rows(rep, "grid_bp:").collect();
    let masses_one = rows.iter().all(|r| (r.formula - 1.0).abs() < 1e-15);
    let f0 = rows.iter().filter(|r| r.case.ends_with(":one")).map(|r| (r.empirical - 1.0).abs()).fold(0.0, f64::max);
    let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let failed = rows.iter().filter(|r| !r.pass).count();
    Outcome::new(
        !rows.is_empty() && masses_one && failed == 0,
        format!("{} rows, {failed} failed; |ratio(f0)-1| <= {f0:.2e}, largest ratio {worst:.6}", rows.len()),
    )
    .detail(failures(rows.iter().copied()))
    .detail(rep.errors.iter().filter(|e| e.member.starts_with("grid_bp:")).map(|e| format!("excluded {}: {}", e.member, e.message)))
}

fn continuous_attainment(rep: &ExperimentReport) -> Outcome {
    let rows: Vec<&Row> = attainment_rows(rep, "continuous_bp:").collect();
    let mut mass_ok = true;
    for n in [1, 2] {
        let w = WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: n });
        let f = opnorm_formula(OpKind::ContinuousBp, &w, 1.0, n).expect("formula");
        mass_ok &= f.bounded && f.value == 1.0;
    }
    let t = Instant::now();
    let cmo = run_named("cmo_upper", &ExperimentConfig::default()).expect("cmo_upper");
    let (fast, time) = within(t.elapsed(), 60);
    let f0 = rows.iter().filter(|r| r.case.ends_with(":one")).map(|r| (r.empirical - 1.0).abs()).fold(0.0, f64::max);
    let failed = rows.iter().filter(|r| !r.pass).count();
    let cmo_failed = cmo.failed_rows().count();
    let best_cmo = cmo.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Outcome::new(
        mass_ok && !rows.is_empty() && failed == 0 && cmo.pass && fast,
        format!(
            "integral of phi = 1: {mass_ok}; B rows {}, {failed} failed, |ratio(f0)-1| <= {f0:.2e}; CMO rows {}, {cmo_failed} failed, best ratio {best_cmo:.6}, {time}",
            rows.len(),
            cmo.rows.len()
        ),
    )
    .detail(failures(rows.iter().copied()))
    .detail(failures(&cmo.rows))
}

/// Half-widths whose midpoint lattice at `density` cells per unit is aligned with every corpus
/// breakpoint (all are multiples of `1/4`).
fn oracle_rects(n: usize) -> Vec<Rect> {
    let hw: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0], vec![2.5], vec![8.0], vec![37.0]],
        _ => vec![vec![1.0, 1.0], vec![2.5, 0.5], vec![4.0, 8.0], vec![9.0, 3.0]],
    };
    hw.into_iter().map(|h| Rect::new(h).expect("rect")).collect()
}

fn oracle_equivalence() -> Outcome {
    let budget = Budget { max_evals: 50_000_000 };
    let mut checked = 0;
    let mut worst_exact: f64 = 0.0;
    let mut skipped = Vec::new();
    let mut bad = Vec::new();
    let t = Instant::now();
    for n in [1, 2] {
        for m in corpus(n) {
            let f = &m.function;
            for r in oracle_rects(n) {
                let constant = (0..n).all(|a| f.constant_breaks(a, -r.half_widths()[a], r.half_widths()[a]).is_some());
                for p in [1.0, 2.0] {
                    let closed = match rect_integral_abs_p(f, p, &r) {
                        Ok(c) => c,
                        Err(Error::NeedsOracle(why)) => {
                            skipped.push(format!("{} n={n} p={p}: {why}", m.id));
                            continue;
                        }
                        Err(e) => panic!("{}: {e}", m.id),
                    };
                    checked += 1;
                    let scale = closed.value.abs().max(1.0);
                    if constant {
                        let grid = GridSpec::with_density(&r, 16.0).expect("grid");
                        let oracle = riemann_integral(f, p, &r, &grid, budget).expect("oracle");
                        let err = (closed.value - oracle).abs() / scale;
                        worst_exact = worst_exact.max(err);
                        if err > ORACLE_EXACT {
                            bad.push(format!("{} n={n} p={p} {:?}: closed {} oracle {oracle}", m.id, r.half_widths(), closed.value));
                        }
                    } else {
                        // Midpoint rule at two resolutions; twice their difference bounds the
                        // error of the finer one.
                        let d = if n == 1 { 256.0 } else { 32.0 };
                        let coarse = riemann_integral(f, p, &r, &GridSpec::with_density(&r, d).expect("grid"), budget).expect("oracle");
                        let fine = riemann_integral(f, p, &r, &GridSpec::with_density(&r, 2.0 * d).expect("grid"), budget).expect("oracle");
                        let bound = 2.0 * (coarse - fine).abs() + closed.error + ORACLE_EXACT * scale;
                        if (closed.value - fine).abs() > bound {
                            bad.push(format!(
                                "{} n={n} p={p} {:?}: closed {} oracle {fine} bound {bound:e}",
                                m.id,
                                r.half_widths(),
                                closed.value
                            ));
                        }
                    }
                }
            }
        }
    }
    skipped.sort();
    skipped.dedup();
    Outcome::new(
        bad.is_empty() && checked > 0,
        format!(
            "{checked} closed-form integrals checked, worst piecewise-constant relative gap {worst_exact:.1e}, {:.2}s; no closed form: {}",
            t.elapsed().as_secs_f64(),
            if skipped.is_empty() { "none".to_string() } else { skipped.join("; ") }
        ),
    )
    .detail(bad)
}

fn properties() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut checks = 0;
    for n in [1, 2] {
        let members: Vec<FunctionSpec> = corpus(n)
            .into_iter()
            .map(|m| m.function)
            .filter(|f| (0..n).all(|a| f.constant_breaks(a, -64.0, 64.0).is_some()))
            .collect();
        for p in [1.0, 2.0] {
            let mut params = NormParams::new(p);
            params.j_max = 4;
            params.per_octave = 2;
            let norms: Vec<f64> = members.iter().map(|f| bp_rect_norm(f, &params).expect("norm").value).collect();
            for (i, f) in members.iter().enumerate() {
                for lam in [-4.0, 0.5, 2.0] {
                    checks += 1;
                    let v = bp_rect_norm(&FunctionSpec::combo(vec![(lam, f.clone())]), &params).expect("norm").value;
                    if v != lam.abs() * norms[i] {
                        bad.push(format!("homogeneity n={n} p={p} #{i} lam={lam}: {v} vs {}", lam.abs() * norms[i]));
                    }
                }
                for (j, g) in members.iter().enumerate().skip(i + 1) {
                    checks += 1;
                    let s = bp_rect_norm(&FunctionSpec::combo(vec![(1.0, f.clone()), (1.0, g.clone())]), &params).expect("norm").value;
                    if s > norms[i] + norms[j] + PROPERTY_TOL {
                        bad.push(format!("triangle n={n} p={p} #{i}+#{j}: {s} > {}", norms[i] + norms[j]));
                    }
                }
                if n == 1 {
                    checks += 1;
                    let plain = cmo_norm(f, &params).expect("cmo").value;
                    let star = cmo_star_norm(f, &params).expect("cmo star").value;
                    if star > plain + PROPERTY_TOL || plain > 2.0 * star + PROPERTY_TOL {
                        bad.push(format!("cmo sandwich p={p} #{i}: star {star}, plain {plain}"));
                    }
                }
            }
        }
        let tol = 1e-12;
        let w = ContinuousWeight::SeparablePower { scale: 1.5, betas: vec![0.5; n] };
        let dw = DiscreteWeight::geometric(0.5, 1.0, 0.5);
        let xs: Vec<Vec<f64>> = [0.3, 1.7, -3.2, 6.1].iter().map(|x| (0..n).map(|k| x * (k as f64 + 1.0)).collect()).collect();
        for (i, f) in members.iter().enumerate() {
            let g = &members[(i + 1) % members.len()];
            let combo = FunctionSpec::combo(vec![(2.0, f.clone()), (-0.5, g.clone())]);
            let lam = vec![0.5; n];
            for x in &xs {
                checks += 3;
                let at = |h: &FunctionSpec, x: &[f64]| apply_continuous(h, &w, x, tol).expect("apply").value;
                let lin = at(&combo, x) - (2.0 * at(f, x) - 0.5 * at(g, x));
                let dat = |h: &FunctionSpec| apply_discrete(h, &dw, x, tol).expect("apply").value;
                let dlin = dat(&combo) - (2.0 * dat(f) - 0.5 * dat(g));
                if lin.abs() > 2.0 * tol || dlin.abs() > 2.0 * tol {
                    bad.push(format!("linearity n={n} #{i} x={x:?}: {lin:e}, {dlin:e}"));
                }
                let scaled_x: Vec<f64> = x.iter().map(|c| 0.5 * c).collect();
                let dil = at(&f.clone().scaled(lam.clone()), x) - at(f, &scaled_x);
                if dil.abs() > 2.0 * tol {
                    bad.push(format!("dilation n={n} #{i} x={x:?}: {dil:e}"));
                }
                let pos = FunctionSpec::combo(vec![(1.0, FunctionSpec::constant(3.0, n)), (1.0, f.clone())]);
                if at(&pos, x) < -2.0 * tol {
                    bad.push(format!("positivity n={n} #{i} x={x:?}"));
                }
            }
        }
    }
    let cfg = ExperimentConfig { m_max: Some(16), ..Default::default() };
    let a = rows_csv(&run_named("inclusion_gap", &cfg).expect("run")).expect("csv");
    let b = rows_csv(&run_named("inclusion_gap", &cfg).expect("run")).expect("csv");
    checks += 1;
    if a != b {
        bad.push("determinism: repeated inclusion_gap CSV differs".into());
    }
    Outcome::new(bad.is_empty(), format!("{checks} checks, {:.2}s", t.elapsed().as_secs_f64())).detail(bad)
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |k: usize, name: &'static str, o: Outcome| {
        println!("{} criterion {k} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        for d in &o.details {
            println!("    {d}");
        }
        results.push((k, name, o));
    };
    record(1, "inclusion gap", inclusion_gap());
    record(2, "dyadic equivalence", dyadic_equivalence());
    record(3, "discrete L^p norm", discrete_lp());
    let (attain, t) = timed("bp_attainment");
    println!("    (bp_attainment ran in {:.2}s)", t.as_secs_f64());
    record(4, "grid attainment", grid_attainment(&attain));
    record(5, "continuous attainment", continuous_attainment(&attain));
    record(6, "Hardy sharpness", hardy());
    record(7, "oracle equivalence", oracle_equivalence());
    let props = properties();
    let (fast, time) = within(start.elapsed(), 300);
    record(8, "property suites", Outcome { pass: props.pass && fast, summary: format!("{}; acceptance total {time}", props.summary), details: props.details });
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.to_string()).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
