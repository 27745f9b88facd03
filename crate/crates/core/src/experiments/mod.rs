//! Named experiments comparing closed-form operator norms with empirical ratios.

mod corpus;
mod empirical;
mod named;
pub mod output;
#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{ContinuousWeight, DiscreteWeight, GridWeight, Series};

pub use corpus::{corpus, CorpusMember};
pub use empirical::{
    continuous_lp_ratio, discrete_lp_ratio, empirical_opnorm, image_for, LpRatio, MemberError, MemberRatio, OpNormReport,
};
pub use named::{run_named, ExperimentConfig, EXPERIMENTS};
pub use output::{write_report, CSV_COLUMNS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    DiscreteLp,
    GridLp,
    GridBp,
    ContinuousBp,
    ContinuousCmo,
    /// `L^p` bound of the continuous operator, `∫ Π t_i^{-1/p} φ(t) dt`.
    ContinuousLp,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::DiscreteLp => "discrete_lp",
            OpKind::GridLp => "grid_lp",
            OpKind::GridBp => "grid_bp",
            OpKind::ContinuousBp => "continuous_bp",
            OpKind::ContinuousCmo => "continuous_cmo",
            OpKind::ContinuousLp => "continuous_lp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operator", content = "weight", rename_all = "snake_case")]
pub enum WeightSpec {
    Discrete(DiscreteWeight),
    Grid(GridWeight),
    Continuous(ContinuousWeight),
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Discrete(w) => w.validate(),
            WeightSpec::Grid(w) => w.validate(),
            WeightSpec::Continuous(w) => w.validate(),
        }
    }
}

/// A closed-form operator norm, or the divergence that makes the operator unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaValue {
    pub bounded: bool,
    /// `+inf` when unbounded.
    pub value: f64,
    pub diagnostic: String,
}

impl FormulaValue {
    fn from_series(s: Series, what: &str) -> Self {
        match s {
            Series::Convergent { value } => FormulaValue { bounded: true, value, diagnostic: format!("{what} converges") },
            Series::Divergent { ratio } => FormulaValue {
                bounded: false,
                value: f64::INFINITY,
                diagnostic: format!("{what} diverges (term ratio {ratio}); the operator is unbounded"),
            },
        }
    }
}

fn wrong_weight(kind: OpKind) -> Error {
    Error::invalid(format!("{} needs a {} weight", kind.name(), match kind {
        OpKind::DiscreteLp => "discrete",
        OpKind::GridLp | OpKind::GridBp => "grid",
        _ => "continuous",
    }))
}

/// The closed-form norm of the operator on the space named by `kind`.
pub fn opnorm_formula(kind: OpKind, weight: &WeightSpec, p: f64, n: usize) -> Result<FormulaValue> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent p must lie in [1, inf), got {p}")));
    }
    weight.validate()?;
    let check_dim = |d: usize| if d == n { Ok(()) } else { Err(Error::DimensionMismatch { expected: n, got: d }) };
    match (kind, weight) {
        (OpKind::DiscreteLp, WeightSpec::Discrete(w)) => {
            Ok(FormulaValue::from_series(w.weighted_series(-(n as f64) / p), "sum of r_k^(-n/p) phi_k"))
        }
        (OpKind::GridLp, WeightSpec::Grid(w)) => {
            check_dim(w.dim())?;
            Ok(FormulaValue::from_series(w.weighted_series(&vec![-1.0 / p; n]), "sum of Phi(k) prod r^(-1/p)"))
        }
        (OpKind::GridBp, WeightSpec::Grid(w)) => {
            check_dim(w.dim())?;
            Ok(FormulaValue::from_series(w.total_mass(), "sum of Phi(k)"))
        }
        (OpKind::ContinuousBp | OpKind::ContinuousCmo, WeightSpec::Continuous(w)) => {
            check_dim(w.dim())?;
            Ok(FormulaValue::from_series(w.moment(&vec![0.0; n]), "integral of phi"))
        }
        (OpKind::ContinuousLp, WeightSpec::Continuous(w)) => {
            check_dim(w.dim())?;
            Ok(FormulaValue::from_series(w.moment(&vec![-1.0 / p; n]), "integral of prod t^(-1/p) phi"))
        }
        (kind, _) => Err(wrong_weight(kind)),
    }
}

/// One line of an experiment's CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub case: String,
    pub param: String,
    pub formula: f64,
    pub empirical: f64,
    /// Numerical error bound on `empirical` (0 for closed-form values).
    pub error: f64,
    pub ratio: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub pass: bool,
    pub rows: Vec<Row>,
    /// Per-member failures that did not stop the run.
    pub errors: Vec<MemberError>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn failed_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }
}
