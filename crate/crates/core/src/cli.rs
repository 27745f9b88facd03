//! Command-line driver: JSON scenarios in, JSON summaries and CSV rows out.
//!
//! Exit codes: 0 success, 1 a failed experiment row, 2 invalid input, 3 evaluation budget
//! exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::output::{fmt, write_atomic};
use crate::experiments::{opnorm_formula, run_named, write_report, ExperimentConfig, FormulaValue, OpKind, WeightSpec, EXPERIMENTS};
use crate::funcs::FunctionSpec;
use crate::norms::{
    bp_ball_norm, bp_dyadic_norm, bp_rect_norm, cmo_norm, cmo_star_norm, herz_norm, HerzParams, NormParams, NormRecord,
};
use crate::operators::{apply_continuous, apply_discrete, apply_grid_discrete, hardy_classic, ContinuousWeight, DiscreteWeight, GridWeight};
use crate::oracle::Budget;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const DEFAULT_APPLY_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "rectherz", version, about = "Rectangular Herz norms and Hardy averages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate one norm of a function.
    Norm(Common),
    /// Evaluate an operator at points or on a grid.
    Apply(Common),
    /// Run named experiments and write their reports.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Experiments to run; overrides the scenario's list.
        names: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest grid-oracle evaluation count per integral.
    #[arg(long)]
    pub budget_evals: Option<u64>,
    /// Quadrature and truncation tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long, default_value = "auto")]
    pub threads: Threads,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
            _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormName {
    BpRect,
    BpDyadic,
    BpBall,
    Cmo,
    CmoStar,
    Herz,
}

impl NormName {
    fn as_str(self) -> &'static str {
        match self {
            NormName::BpRect => "bp_rect",
            NormName::BpDyadic => "bp_dyadic",
            NormName::BpBall => "bp_ball",
            NormName::Cmo => "cmo",
            NormName::CmoStar => "cmo_star",
            NormName::Herz => "herz",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormScenario {
    pub norm: NormName,
    pub function: FunctionSpec,
    pub params: NormParams,
    /// Required for `herz`.
    #[serde(default)]
    pub herz: Option<HerzParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Discrete { weight: DiscreteWeight },
    Grid { weight: GridWeight },
    Continuous { weight: ContinuousWeight },
    /// `(1/x) ∫_0^x f`, one-dimensional.
    HardyClassic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Lp,
    Bp,
    Cmo,
}

/// Closed-form operator norm to report alongside the values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpNormRequest {
    pub space: Space,
    pub p: f64,
}

/// A uniform grid: `steps[i] + 1` points from `lo[i]` to `hi[i]` on each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub steps: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyScenario {
    pub operator: OperatorSpec,
    pub function: FunctionSpec,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub grid: Option<PointGrid>,
    #[serde(default)]
    pub opnorm: Option<OpNormRequest>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyScenario {
    #[serde(default)]
    pub experiments: Vec<String>,
    #[serde(default)]
    pub config: ExperimentConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplySummary {
    pub operator: String,
    pub points: usize,
    pub bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opnorm: Option<FormulaValue>,
    pub diagnostic: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyLine {
    pub experiment: String,
    pub pass: bool,
    pub rows: usize,
    pub failed: usize,
    pub errors: usize,
    pub dir: String,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_INVALID,
    }
}

fn read_scenario<T: for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T> {
    let path = path.ok_or_else(|| Error::invalid("--scenario is required"))?;
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads an apply scenario, replacing a `{"file": path}` weight by the file's contents.
/// Relative paths resolve against the scenario's directory.
fn read_apply_scenario(path: Option<&Path>) -> Result<ApplyScenario> {
    let path = path.ok_or_else(|| Error::invalid("--scenario is required"))?;
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if let Some(w) = doc.pointer_mut("/operator/weight") {
        if let Some(file) = w.as_object().filter(|o| o.len() == 1).and_then(|o| o.get("file")).and_then(|f| f.as_str()) {
            let base = path.parent().unwrap_or(Path::new("."));
            *w = serde_json::from_str(&std::fs::read_to_string(base.join(file))?)?;
        }
    }
    Ok(serde_json::from_value(doc)?)
}

fn set_threads(t: Threads) {
    if let Threads::Fixed(n) = t {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn check_tol(tol: Option<f64>) -> Result<()> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(Error::invalid(format!("--tol must be positive, got {t}"))),
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Estimates the requested norm; returns the JSON text written to standard output.
pub fn cmd_norm(common: &Common) -> Result<String> {
    let mut sc: NormScenario = read_scenario(common.scenario.as_deref())?;
    if let Some(b) = common.budget_evals {
        sc.params.budget = Budget { max_evals: b };
    }
    sc.function.dim()?;
    let f = &sc.function;
    let est = match sc.norm {
        NormName::BpRect => bp_rect_norm(f, &sc.params)?,
        NormName::BpDyadic => bp_dyadic_norm(f, &sc.params)?,
        NormName::BpBall => bp_ball_norm(f, &sc.params)?,
        NormName::Cmo => cmo_norm(f, &sc.params)?,
        NormName::CmoStar => cmo_star_norm(f, &sc.params)?,
        NormName::Herz => {
            let hp = sc.herz.as_ref().ok_or_else(|| Error::invalid("norm `herz` needs a `herz` block"))?;
            herz_norm(f, &sc.params, hp)?
        }
    };
    let mut params = serde_json::to_value(&sc.params)?;
    if let (Some(hp), Some(obj)) = (&sc.herz, params.as_object_mut()) {
        obj.insert("herz".into(), serde_json::to_value(hp)?);
    }
    let text = to_json(&NormRecord::new(sc.norm.as_str(), params, est))?;
    if let Some(out) = &common.out {
        write_atomic(&out.join("norm.json"), text.as_bytes())?;
    }
    Ok(text)
}

fn grid_points(g: &PointGrid) -> Result<Vec<Vec<f64>>> {
    let n = g.lo.len();
    if n == 0 || g.hi.len() != n || g.steps.len() != n {
        return Err(Error::invalid("grid lo, hi and steps must have the same nonzero length"));
    }
    let total: usize = g.steps.iter().map(|s| s + 1).product();
    if total > 1_000_000 {
        return Err(Error::invalid(format!("grid has {total} points; at most 1000000 are allowed")));
    }
    let axis = |i: usize| -> Vec<f64> {
        let s = g.steps[i];
        if s == 0 {
            return vec![g.lo[i]];
        }
        (0..=s).map(|k| g.lo[i] + (g.hi[i] - g.lo[i]) * k as f64 / s as f64).collect()
    };
    let axes: Vec<Vec<f64>> = (0..n).map(axis).collect();
    let mut out = vec![Vec::new()];
    for a in &axes {
        out = out.into_iter().flat_map(|p| a.iter().map(move |x| [p.clone(), vec![*x]].concat())).collect();
    }
    Ok(out)
}

fn opnorm_kind(op: &OperatorSpec, space: Space) -> Result<(OpKind, WeightSpec)> {
    let pair = match (op, space) {
        (OperatorSpec::Discrete { weight }, Space::Lp) => (OpKind::DiscreteLp, WeightSpec::Discrete(weight.clone())),
        (OperatorSpec::Grid { weight }, Space::Lp) => (OpKind::GridLp, WeightSpec::Grid(weight.clone())),
        (OperatorSpec::Grid { weight }, Space::Bp) => (OpKind::GridBp, WeightSpec::Grid(weight.clone())),
        (OperatorSpec::Continuous { weight }, Space::Lp) => (OpKind::ContinuousLp, WeightSpec::Continuous(weight.clone())),
        (OperatorSpec::Continuous { weight }, Space::Bp) => (OpKind::ContinuousBp, WeightSpec::Continuous(weight.clone())),
        (OperatorSpec::Continuous { weight }, Space::Cmo) => (OpKind::ContinuousCmo, WeightSpec::Continuous(weight.clone())),
        (OperatorSpec::HardyClassic, Space::Lp) => {
            (OpKind::ContinuousLp, WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: 1 }))
        }
        (OperatorSpec::HardyClassic, Space::Bp) => {
            (OpKind::ContinuousBp, WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: 1 }))
        }
        (OperatorSpec::HardyClassic, Space::Cmo) => {
            (OpKind::ContinuousCmo, WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: 1 }))
        }
        _ => return Err(Error::invalid("no closed-form norm for this operator on the requested space")),
    };
    Ok(pair)
}

fn operator_name(op: &OperatorSpec) -> &'static str {
    match op {
        OperatorSpec::Discrete { .. } => "discrete",
        OperatorSpec::Grid { .. } => "grid",
        OperatorSpec::Continuous { .. } => "continuous",
        OperatorSpec::HardyClassic => "hardy_classic",
    }
}

/// Evaluates the operator; returns the text for standard output (the CSV without `--out`,
/// the JSON summary with it).
pub fn cmd_apply(common: &Common) -> Result<String> {
    check_tol(common.tol)?;
    let sc = read_apply_scenario(common.scenario.as_deref())?;
    let n = sc.function.dim()?;
    let tol = common.tol.or(sc.tol).unwrap_or(DEFAULT_APPLY_TOL);
    check_tol(Some(tol))?;
    let points = match (&sc.points, &sc.grid) {
        (Some(p), None) => p.clone(),
        (None, Some(g)) => grid_points(g)?,
        _ => return Err(Error::invalid("give exactly one of `points` and `grid`")),
    };
    if let Some(bad) = points.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    let opnorm = match &sc.opnorm {
        Some(req) => {
            let (kind, w) = opnorm_kind(&sc.operator, req.space)?;
            Some(opnorm_formula(kind, &w, req.p, n)?)
        }
        None => None,
    };
    let bounded = opnorm.as_ref().map_or(true, |f| f.bounded);
    let mut rows = Vec::new();
    if bounded {
        for x in &points {
            let a = match &sc.operator {
                OperatorSpec::Discrete { weight } => apply_discrete(&sc.function, weight, x, tol)?,
                OperatorSpec::Grid { weight } => apply_grid_discrete(&sc.function, weight, x, tol)?,
                OperatorSpec::Continuous { weight } => apply_continuous(&sc.function, weight, x, tol)?,
                OperatorSpec::HardyClassic => hardy_classic(&sc.function, x[0], tol)?,
            };
            rows.push((x.clone(), a.value, a.error_bound));
        }
    }
    let diagnostic = match &opnorm {
        Some(f) if !f.bounded => format!("{}; pointwise values not computed", f.diagnostic),
        Some(f) => f.diagnostic.clone(),
        None => String::new(),
    };
    let summary = ApplySummary { operator: operator_name(&sc.operator).into(), points: rows.len(), bounded, opnorm, diagnostic };
    let csv = apply_csv(n, &rows)?;
    match &common.out {
        Some(out) => {
            write_atomic(&out.join("apply.csv"), csv.as_bytes())?;
            let text = to_json(&summary)?;
            write_atomic(&out.join("apply.json"), text.as_bytes())?;
            Ok(text)
        }
        None if bounded => Ok(csv),
        None => to_json(&summary),
    }
}

fn apply_csv(n: usize, rows: &[(Vec<f64>, f64, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = if n == 1 { vec!["x".into()] } else { (1..=n).map(|i| format!("x{i}")).collect() };
    header.extend(["value".into(), "error_bound".into()]);
    w.write_record(&header)?;
    for (x, v, e) in rows {
        let mut rec: Vec<String> = x.iter().map(|c| fmt(*c)).collect();
        rec.extend([fmt(*v), fmt(*e)]);
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs the experiments; returns the summary lines and whether every row passed.
pub fn cmd_verify(common: &Common, names: &[String]) -> Result<(String, bool)> {
    check_tol(common.tol)?;
    let mut sc: VerifyScenario = match &common.scenario {
        Some(p) => read_scenario(Some(p))?,
        None => VerifyScenario::default(),
    };
    if !names.is_empty() {
        sc.experiments = names.to_vec();
    }
    if sc.experiments.is_empty() {
        return Err(Error::invalid(format!("name at least one experiment: {}", EXPERIMENTS.join(", "))));
    }
    if let Some(bad) = sc.experiments.iter().find(|n| !EXPERIMENTS.contains(&n.as_str())) {
        return Err(Error::invalid(format!("unknown experiment `{bad}`; expected one of {}", EXPERIMENTS.join(", "))));
    }
    if let Some(b) = common.budget_evals {
        sc.config.budget_evals = Some(b);
    }
    if let Some(t) = common.tol {
        sc.config.tol = Some(t);
    }
    sc.config.validate()?;
    let out = common.out.clone().or(sc.out.clone()).unwrap_or_else(|| PathBuf::from("reports"));
    let mut text = String::new();
    let mut all = true;
    for name in &sc.experiments {
        let report = run_named(name, &sc.config)?;
        let dir = write_report(&out, &report)?;
        all &= report.pass;
        let line = VerifyLine {
            experiment: report.experiment.clone(),
            pass: report.pass,
            rows: report.rows.len(),
            failed: report.failed_rows().count(),
            errors: report.errors.len(),
            dir: dir.display().to_string(),
        };
        writeln!(text, "{}", serde_json::to_string(&line)?).expect("write to string");
    }
    Ok((text, all))
}

/// Parses `args`, runs the command, prints its output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
        }
    };
    let common = match &cli.command {
        Command::Norm(c) | Command::Apply(c) => c,
        Command::Verify { common, .. } => common,
    };
    set_threads(common.threads);
    let result = match &cli.command {
        Command::Norm(c) => cmd_norm(c).map(|t| (t, true)),
        Command::Apply(c) => cmd_apply(c).map(|t| (t, true)),
        Command::Verify { common, names } => cmd_verify(common, names),
    };
    match result {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
