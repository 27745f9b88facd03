use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcs::{FunctionSpec, Rect};
use crate::norms::{
    bp_dyadic_norm, bp_rect_norm, rect_avg_p, root_error, sandwich_chain_constant, Convention, NormParams,
};
use crate::numeric::dyadic_log_grid;
use crate::operators::{ContinuousWeight, DiscreteWeight, GridWeight};
use crate::oracle::{disk_integral, Budget};
use crate::quad::QuadTol;
use crate::tolerances::{BALL_QUAD, EXACT_EQUIV, HARDY_QUAD, HARDY_THRESHOLD, OPNORM_ABS, STAIRCASE_BALL_BOUND};

use super::corpus::corpus;
use super::empirical::{continuous_lp_ratio, discrete_lp_ratio, empirical_opnorm, is_fatal, MemberError};
use super::{opnorm_formula, ExperimentReport, OpKind, Row, WeightSpec};

/// Names accepted by [`run_named`].
pub const EXPERIMENTS: [&str; 7] = [
    "inclusion_gap",
    "dyadic_equivalence",
    "hardy_sharpness",
    "bp_attainment",
    "cmo_upper",
    "homogeneous_smoke",
    "discrete_lp",
];

/// Overrides for a named experiment; every field falls back to the experiment's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub p_values: Option<Vec<f64>>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub j_max: Option<u32>,
    #[serde(default)]
    pub per_octave: Option<u32>,
    /// Largest staircase half-width for `inclusion_gap`; a power of two.
    #[serde(default)]
    pub m_max: Option<u32>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    /// Quadrature and truncation tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub budget_evals: Option<u64>,
    #[serde(default)]
    pub ball_cells: Option<usize>,
    /// Finest scale `2^-j_min` for `homogeneous_smoke`.
    #[serde(default)]
    pub j_min: Option<u32>,
    /// Replaces the experiment's weight (operator experiments only).
    #[serde(default)]
    pub weight: Option<WeightSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(ps) = &self.p_values {
            if ps.is_empty() || ps.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
                return Err(Error::invalid("p_values must be non-empty and lie in [1, inf)"));
            }
        }
        if let Some(ds) = &self.dims {
            if ds.is_empty() || ds.iter().any(|d| !(1..=2).contains(d)) {
                return Err(Error::invalid("dims must be non-empty with entries 1 or 2"));
            }
        }
        if let Some(m) = self.m_max {
            if m < 2 || !m.is_power_of_two() {
                return Err(Error::invalid("m_max must be a power of two >= 2"));
            }
        }
        if let Some(e) = &self.eps {
            if e.is_empty() || e.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("eps sweep must be non-empty and positive"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid("tol must lie in (0, 1)"));
            }
        }
        if self.per_octave == Some(0) {
            return Err(Error::invalid("per_octave must be positive"));
        }
        if let Some(w) = &self.weight {
            w.validate()?;
        }
        Ok(())
    }

    fn params(&self, p: f64) -> NormParams {
        let mut np = NormParams::new(p);
        if let Some(j) = self.j_max {
            np.j_max = j;
        }
        if let Some(k) = self.per_octave {
            np.per_octave = k;
        }
        if let Some(b) = self.budget_evals {
            np.budget = Budget { max_evals: b };
        }
        np.ball_cells = self.ball_cells;
        np
    }

    fn ps(&self, default: &[f64]) -> Vec<f64> {
        self.p_values.clone().unwrap_or_else(|| default.to_vec())
    }

    fn dims(&self) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| vec![1, 2])
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }
}

struct Builder {
    report: ExperimentReport,
}

impl Builder {
    fn new(name: &str) -> Self {
        Builder {
            report: ExperimentReport { experiment: name.into(), pass: true, rows: Vec::new(), errors: Vec::new(), notes: Vec::new() },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn row(&mut self, case: &str, param: String, formula: f64, empirical: f64, error: f64, tol: f64, pass: bool) {
        let ratio = if formula != 0.0 && formula.is_finite() { empirical / formula } else { f64::NAN };
        self.report.rows.push(Row {
            experiment: self.report.experiment.clone(),
            case: case.into(),
            param,
            formula,
            empirical,
            error,
            ratio,
            tol,
            pass,
        });
    }

    fn error(&mut self, member: impl Into<String>, e: &Error) {
        self.report.errors.push(MemberError { member: member.into(), message: e.to_string() });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.report.notes.push(s.into());
    }

    fn finish(mut self) -> ExperimentReport {
        self.report.pass = !self.report.rows.is_empty() && self.report.rows.iter().all(|r| r.pass);
        self.report
    }
}

/// Runs a named experiment.
pub fn run_named(name: &str, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match name {
        "inclusion_gap" => inclusion_gap(config),
        "dyadic_equivalence" => dyadic_equivalence(config),
        "hardy_sharpness" => hardy_sharpness(config),
        "bp_attainment" => attainment("bp_attainment", config, None),
        "homogeneous_smoke" => attainment("homogeneous_smoke", config, Some(config.j_min.unwrap_or(12))),
        "cmo_upper" => cmo_upper(config),
        "discrete_lp" => discrete_lp(config),
        other => Err(Error::invalid(format!("unknown experiment `{other}`; expected one of {}", EXPERIMENTS.join(", ")))),
    }
}

/// Staircase averages: rectangles `(1, m)` grow like `(m+1)/2`, ball averages stay below `6^(1/p)`.
fn inclusion_gap(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut b = Builder::new("inclusion_gap");
    let m_max = config.m_max.unwrap_or(64);
    let j = m_max.trailing_zeros() as i32;
    for p in config.ps(&[1.0]) {
        let stair = FunctionSpec::staircase(p);
        for m in (2..=m_max).step_by(2) {
            let r = Rect::new(vec![1.0, m as f64])?;
            let avg = rect_avg_p(&stair, p, &r, Convention::Volume)?;
            let v = avg.value;
            let exact = ((m as f64 + 1.0) / 2.0).powf(1.0 / p);
            let tol = EXACT_EQUIV * exact;
            let param = format!("p={p},m={m}");
            b.row("rect_exact", param.clone(), exact, v, avg.error, tol, (v - exact).abs() <= tol);
            let lower = (m as f64 / 2.0).powf(1.0 / p);
            b.row("rect_lower", param, lower, v, avg.error, 0.0, v >= lower);
        }
        let bound = STAIRCASE_BALL_BOUND.powf(1.0 / p);
        for radius in dyadic_log_grid(0, j, config.per_octave.unwrap_or(4)) {
            let area = std::f64::consts::PI * radius * radius;
            let disk = disk_integral(&stair, p, radius, QuadTol::new(1e-12 * area, 1e-12))?
                .ok_or_else(|| Error::invalid("the staircase is piecewise constant"))?;
            let est = (disk.value / area).powf(1.0 / p);
            let err = root_error(disk.value / area, disk.error / area, p);
            b.row("ball", format!("p={p},R={radius}"), bound, est, err, BALL_QUAD, est <= bound + BALL_QUAD);
        }
    }
    b.note("rect averages use the volume normalization 1/(4 R_1 R_2)");
    Ok(b.finish())
}

/// `bp_dyadic ≤ bp_rect ≤ C·bp_dyadic` with `bp_rect` literal-normalized and `C` from the shell chain.
fn dyadic_equivalence(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut b = Builder::new("dyadic_equivalence");
    for n in config.dims() {
        let members = corpus(n);
        for p in config.ps(&[1.0, 2.0]) {
            let params = config.params(p).with_convention(Convention::Literal);
            let stated = 4f64.powf(n as f64 / p);
            let chain = sandwich_chain_constant(n, p, params.j_max);
            let param = format!("n={n},p={p}");
            b.row("chain_constant", param.clone(), stated, chain, 0.0, 0.0, chain <= stated);
            for m in &members {
                let both = bp_dyadic_norm(&m.function, &params).and_then(|d| Ok((d, bp_rect_norm(&m.function, &params)?)));
                let (d, r) = match both {
                    Ok(v) => v,
                    Err(e) if is_fatal(&e) => return Err(e),
                    Err(e) => {
                        b.error(format!("{}({param})", m.id), &e);
                        continue;
                    }
                };
                let case = m.id.as_str();
                let slack = EXACT_EQUIV * d.value.max(r.value) + d.error_bound + r.error_bound;
                b.row(&format!("{case}:lower"), param.clone(), r.value, d.value, slack, EXACT_EQUIV, d.value <= r.value + slack);
                b.row(
                    &format!("{case}:upper"),
                    param.clone(),
                    stated * d.value,
                    r.value,
                    slack * stated,
                    EXACT_EQUIV,
                    r.value <= stated * d.value + slack * stated,
                );
            }
        }
    }
    b.note("lower rows: formula = bp_rect, empirical = bp_dyadic; upper rows: formula = 4^(n/p) bp_dyadic, empirical = bp_rect");
    Ok(b.finish())
}

fn sweep(config: &ExperimentConfig, default: &[f64]) -> Vec<f64> {
    let mut eps = config.eps.clone().unwrap_or_else(|| default.to_vec());
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    eps
}

fn monotone_row(b: &mut Builder, param: String, seq: &[(f64, f64)], formula: f64) {
    // `seq` holds (ratio, error) in order of decreasing eps.
    let ok = seq.windows(2).all(|w| w[1].0 + w[1].1 + w[0].1 + EXACT_EQUIV >= w[0].0);
    let last = seq.last().map_or(f64::NAN, |s| s.0);
    b.row("monotone", param, formula, last, 0.0, EXACT_EQUIV, ok);
}

/// `f_ε` ratios of a discrete weight against `Σ r_k^{-1/p} φ_k` and the series lower bracket.
fn discrete_lp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut b = Builder::new("discrete_lp");
    let default = config.weight.is_none();
    let w = match &config.weight {
        None => DiscreteWeight::geometric(0.5, 1.0, 0.125),
        Some(WeightSpec::Discrete(w)) => w.clone(),
        Some(_) => return Err(Error::invalid("discrete_lp needs a discrete weight")),
    };
    let spec = WeightSpec::Discrete(w.clone());
    let tol = config.tol.unwrap_or(1e-13);
    for p in config.ps(&[1.0]) {
        let formula = opnorm_formula(OpKind::DiscreteLp, &spec, p, 1)?;
        let param = format!("p={p}");
        if default && p == 1.0 {
            let third = 1.0 / 3.0;
            b.row("formula", param.clone(), third, formula.value, 0.0, EXACT_EQUIV, (formula.value - third).abs() <= EXACT_EQUIV);
        }
        if !formula.bounded {
            b.note(format!("p={p}: {}", formula.diagnostic));
        }
        let mut seq = Vec::new();
        for eps in sweep(config, &[0.5, 0.2, 0.1, 0.05]) {
            let r = match discrete_lp_ratio(&w, p, eps, tol) {
                Ok(r) => r,
                Err(e) => {
                    b.error(format!("f_eps(p={p},eps={eps})"), &e);
                    continue;
                }
            };
            let err = r.quad_error + r.truncation;
            let series = w.weighted_series(-1.0 / p - eps);
            let lower = eps.powf(eps) * series.value().unwrap_or(f64::INFINITY);
            let upper = formula.value + OPNORM_ABS + err;
            let ep = format!("p={p},eps={eps}");
            b.row("bracket_lower", ep.clone(), lower, r.value, err, r.quad_error, r.value + err >= lower - r.quad_error);
            b.row("bracket_upper", ep, formula.value, r.value, err, OPNORM_ABS, r.value <= upper);
            seq.push((r.value, err));
        }
        monotone_row(&mut b, param, &seq, formula.value);
    }
    b.note("lower bracket eps^eps * sum r_k^(-1/p-eps) phi_k; for p = 1 the witness ratio equals sum phi_k / r_k for every eps");
    Ok(b.finish())
}

/// `f_ε` ratios of the one-dimensional continuous operator approaching `∫ t^{-1/p} φ`.
fn hardy_sharpness(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut b = Builder::new("hardy_sharpness");
    let default = config.weight.is_none();
    let w = match &config.weight {
        None => ContinuousWeight::Constant { c: 1.0, dim: 1 },
        Some(WeightSpec::Continuous(w)) if w.dim() == 1 => w.clone(),
        Some(_) => return Err(Error::invalid("hardy_sharpness needs a one-dimensional continuous weight")),
    };
    let spec = WeightSpec::Continuous(w.clone());
    let tol = config.tol.unwrap_or(HARDY_QUAD);
    for p in config.ps(&[2.0]) {
        let formula = opnorm_formula(OpKind::ContinuousLp, &spec, p, 1)?;
        let param = format!("p={p}");
        if !formula.bounded {
            b.note(format!("p={p}: {}", formula.diagnostic));
            b.row("formula", param, f64::INFINITY, formula.value, 0.0, 0.0, true);
            continue;
        }
        if default {
            let classic = p / (p - 1.0);
            b.row("formula", param.clone(), classic, formula.value, 0.0, EXACT_EQUIV, (formula.value - classic).abs() <= EXACT_EQUIV * classic);
        }
        let mut seq = Vec::new();
        let eps_list = sweep(config, &[0.5, 0.2, 0.1, 0.05, 0.02]);
        for &eps in &eps_list {
            let r = match continuous_lp_ratio(&w, p, eps, tol) {
                Ok(r) => r,
                Err(e) => {
                    b.error(format!("f_eps(p={p},eps={eps})"), &e);
                    continue;
                }
            };
            let err = r.quad_error + r.truncation;
            let ep = format!("p={p},eps={eps}");
            if default {
                let lower = eps.powf(eps) / ((p - 1.0) / p + eps);
                b.row("bracket_lower", ep.clone(), lower, r.value, err, HARDY_QUAD, r.value + err >= lower * (1.0 - HARDY_QUAD));
            }
            b.row("bracket_upper", ep.clone(), formula.value, r.value, err, OPNORM_ABS, r.value <= formula.value + OPNORM_ABS + err);
            if default && p == 2.0 && eps == 0.02 {
                b.row("threshold", ep, HARDY_THRESHOLD, r.value, err, 0.0, r.value > HARDY_THRESHOLD);
            }
            seq.push((r.value, err));
        }
        monotone_row(&mut b, param, &seq, formula.value);
    }
    Ok(b.finish())
}

fn attainment_weights(config: &ExperimentConfig, n: usize) -> Vec<(OpKind, WeightSpec)> {
    match &config.weight {
        Some(w @ WeightSpec::Grid(g)) if g.dim() == n => vec![(OpKind::GridBp, w.clone())],
        Some(w @ WeightSpec::Continuous(c)) if c.dim() == n => vec![(OpKind::ContinuousBp, w.clone())],
        Some(_) => Vec::new(),
        None => vec![
            (
                OpKind::GridBp,
                WeightSpec::Grid(GridWeight::Product { rho: vec![0.5; n], scale: 3f64.powi(n as i32), theta: vec![0.25; n] }),
            ),
            (OpKind::ContinuousBp, WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: n })),
        ],
    }
}

/// Equality at `f₀ ≡ 1` and the upper bound over the corpus, for the grid and continuous operators.
fn attainment(name: &str, config: &ExperimentConfig, j_min: Option<u32>) -> Result<ExperimentReport> {
    let mut b = Builder::new(name);
    if let Some(j) = j_min {
        b.note(format!("homogeneous norms: half-widths from 2^-{j}"));
    }
    for n in config.dims() {
        let members = corpus(n);
        let weights = attainment_weights(config, n);
        if weights.is_empty() {
            b.note(format!("n={n}: the configured weight has another dimension; skipped"));
        }
        for (kind, w) in weights {
            for p in config.ps(&[1.0, 2.0]) {
                let mut params = config.params(p);
                if let Some(j) = j_min {
                    params = params.homogeneous(j);
                }
                let rep = empirical_opnorm(kind, &w, &members, &params, &[], config.tol())?;
                let param = format!("n={n},p={p}");
                let f = rep.formula.value;
                if !rep.formula.bounded {
                    b.note(format!("{} {param}: {}", kind.name(), rep.formula.diagnostic));
                }
                for m in &rep.members {
                    let case = format!("{}:{}", kind.name(), m.member);
                    if m.member == "one" {
                        b.row(&case, param.clone(), f, m.ratio, m.error, OPNORM_ABS, (m.ratio - f).abs() < OPNORM_ABS);
                    } else {
                        b.row(&case, param.clone(), f, m.ratio, m.error, OPNORM_ABS, m.ratio <= f + OPNORM_ABS + m.error);
                    }
                    if !m.converged {
                        b.note(format!("{case} {param}: sup search not converged"));
                    }
                }
                for e in rep.errors {
                    b.report.errors.push(MemberError { member: format!("{}:{}({param})", kind.name(), e.member), message: e.message });
                }
            }
        }
    }
    Ok(b.finish())
}

/// `‖ℍ_φ f‖_CMO ≤ (∫φ) ‖f‖_CMO` over the corpus; constants have zero oscillation and are excluded.
fn cmo_upper(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut b = Builder::new("cmo_upper");
    for n in config.dims() {
        let w = match &config.weight {
            None => WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: n }),
            Some(w @ WeightSpec::Continuous(c)) if c.dim() == n => w.clone(),
            Some(WeightSpec::Continuous(_)) => continue,
            Some(_) => return Err(Error::invalid("cmo_upper needs a continuous weight")),
        };
        let members = corpus(n);
        for p in config.ps(&[1.0, 2.0]) {
            let rep = empirical_opnorm(OpKind::ContinuousCmo, &w, &members, &config.params(p), &[], config.tol())?;
            let param = format!("n={n},p={p}");
            let f = rep.formula.value;
            for m in &rep.members {
                b.row(&m.member, param.clone(), f, m.ratio, m.error, OPNORM_ABS, m.ratio <= f + OPNORM_ABS + m.error);
            }
            if !rep.members.is_empty() {
                b.note(format!("{param}: best ratio {} at {} (no equality asserted)", rep.empirical, rep.witness));
            }
            for e in rep.errors {
                b.report.errors.push(MemberError { member: format!("{}({param})", e.member), message: e.message });
            }
        }
    }
    Ok(b.finish())
}
