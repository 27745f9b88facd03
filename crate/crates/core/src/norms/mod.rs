//! Rectangular and ball-based Herz-type norms.
//!
//! Every outer supremum is taken over an explicit candidate set, so each reported value is
//! a lower bound for the true norm. `converged` records whether the objective had stopped
//! growing at the edge of the candidate set.

mod rect;
mod shell;
#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::Budget;

pub use rect::{
    bp_dyadic_norm, bp_rect_norm, cmo_norm, cmo_star_norm, dyadic_shell_integral, rect_avg_p, rect_candidates,
    rect_oscillation, sandwich_chain_constant, Oscillation,
};
pub use shell::{
    ball_average, ball_cells, ball_herz_ratio_bound, ball_rect_ratio_bound, bp_ball_norm, herz_ball_ratio_bound, herz_norm,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Divide by the rectangle's volume `Π 2R_j`.
    #[default]
    Volume,
    /// Divide by `Π R_j`; larger than the volume average by `2^n`.
    Literal,
}

impl Convention {
    pub fn normalizer(self, r: &crate::Rect) -> f64 {
        match self {
            Convention::Volume => r.volume(),
            Convention::Literal => r.half_width_product(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    /// Half-widths `R_j >= 1`, shells `j >= 0`.
    Inhomogeneous,
    /// Half-widths down to `2^-j_min`, shells `j >= -j_min`.
    Homogeneous {
        #[serde(default = "default_j_min")]
        j_min: u32,
    },
}

fn default_j_min() -> u32 {
    20
}

impl Variant {
    pub fn lowest_exponent(self) -> i32 {
        match self {
            Variant::Inhomogeneous => 0,
            Variant::Homogeneous { j_min } => -(j_min as i32),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormParams {
    pub p: f64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    /// Largest dyadic exponent searched: half-widths up to `2^j_max`.
    #[serde(default = "default_j_max")]
    pub j_max: u32,
    /// Candidates per octave, including the dyadic point.
    #[serde(default = "default_per_octave")]
    pub per_octave: u32,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub budget: Budget,
    /// Grid cells per axis for ball integrals in dimension 2 and 3; `None` picks a default.
    #[serde(default)]
    pub ball_cells: Option<usize>,
}

fn default_variant() -> Variant {
    Variant::Inhomogeneous
}
fn default_j_max() -> u32 {
    6
}
fn default_per_octave() -> u32 {
    4
}

impl NormParams {
    pub fn new(p: f64) -> Self {
        NormParams {
            p,
            variant: Variant::Inhomogeneous,
            j_max: default_j_max(),
            per_octave: default_per_octave(),
            convention: Convention::Volume,
            budget: Budget::default(),
            ball_cells: None,
        }
    }

    pub fn homogeneous(mut self, j_min: u32) -> Self {
        self.variant = Variant::Homogeneous { j_min };
        self
    }

    pub fn with_j_max(mut self, j_max: u32) -> Self {
        self.j_max = j_max;
        self
    }

    pub fn with_convention(mut self, c: Convention) -> Self {
        self.convention = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("exponent p must lie in [1, inf), got {}", self.p)));
        }
        if self.j_max < 1 {
            return Err(Error::invalid("j_max must be at least 1"));
        }
        if self.per_octave < 1 {
            return Err(Error::invalid("per_octave must be at least 1"));
        }
        Ok(())
    }
}

/// `q` in `[1, inf]`; serialized as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(q) => s.serialize_f64(*q),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) => Ok(Exponent::Finite(q)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(Exponent::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HerzParams {
    pub alpha: f64,
    pub q: Exponent,
    /// Shells `k = 0..=k_max`, the `k`-th being `B_{2^k} \ B_{2^(k-1)}` (`k = 0`: the unit ball).
    #[serde(default = "default_j_max")]
    pub k_max: u32,
}

impl HerzParams {
    pub fn validate(&self) -> Result<()> {
        if let Exponent::Finite(q) = self.q {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(Error::invalid(format!("herz exponent q must lie in [1, inf], got {q}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("herz alpha must be finite"));
        }
        Ok(())
    }
}

/// Where the supremum was attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Attained {
    Rect(Vec<f64>),
    Dyadic(Vec<i32>),
    Radius(f64),
    Shell(u32),
    /// Sums run over every shell; there is no single maximizer.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub attained: Attained,
    pub converged: bool,
    /// Bound on the numerical error of `value` over the evaluated candidates.
    pub error_bound: f64,
    pub note: String,
}

/// A norm request together with its result, as written by the command-line driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub norm: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub argmax: Attained,
    pub converged: bool,
    pub error_bound: f64,
    pub note: String,
}

impl NormRecord {
    pub fn new(norm: &str, params: serde_json::Value, est: NormEstimate) -> Self {
        NormRecord {
            norm: norm.to_string(),
            params,
            value: est.value,
            argmax: est.attained,
            converged: est.converged,
            error_bound: est.error_bound,
            note: est.note,
        }
    }
}

/// Error in `v^(1/p)` induced by an error `e` in `v`.
pub fn root_error(v: f64, e: f64, p: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let mid = v.max(0.0).powf(1.0 / p);
    let hi = (v + e).max(0.0).powf(1.0 / p);
    let lo = (v - e).max(0.0).powf(1.0 / p);
    (hi - mid).max(mid - lo)
}
