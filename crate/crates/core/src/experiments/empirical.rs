use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::funcs::FunctionSpec;
use crate::norms::{bp_rect_norm, cmo_norm, root_error, NormEstimate, NormParams};
use crate::numeric::stable_sum;
use crate::operators::weights::{integrate_power, Monomial};
use crate::operators::{continuous_image, grid_image, ContinuousWeight, DiscreteWeight, GridWeight, Image};
use crate::quad::{integrate, QuadTol};

use super::corpus::CorpusMember;
use super::{opnorm_formula, FormulaValue, OpKind, WeightSpec};

/// Depth used for unbounded discrete weights, whose ratios grow without limit.
const DIVERGENT_DEPTH: usize = 64;
/// `log2` of the cut point beyond which the continuous image is bracketed analytically.
const CONTINUOUS_CUT_LOG2: f64 = 100.0;

/// `‖T f_ε‖_p / ‖f_ε‖_p` for the one-dimensional witness `f_ε(x) = |x|^{-1/p-ε} χ_{|x|>1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRatio {
    pub eps: f64,
    /// Certified lower estimate of the ratio.
    pub value: f64,
    /// Quadrature error of `value`.
    pub quad_error: f64,
    /// How far the true ratio may exceed `value` because of truncation or the analytic tail.
    pub truncation: f64,
    pub terms: usize,
}

fn check_witness(p: f64, eps: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent p must lie in [1, inf), got {p}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("witness parameter eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Ratio for the discrete operator. With `‖f_ε‖_p^p = 2/(pε)` and `T_K` the operator truncated
/// after `K` terms, `‖T_K f_ε‖_p^p = 2 ∫_1^∞ |T_K f_ε|^p`: the part up to `X = 1/r_K` is
/// integrated in `u = ln x`, and beyond `X` every retained term is active, so `T_K f_ε(x) =
/// S_K x^{-1/p-ε}` there and the rest is `S_K^p X^{-pε}/(pε)`.
pub fn discrete_lp_ratio(w: &DiscreteWeight, p: f64, eps: f64, tol: f64) -> Result<LpRatio> {
    w.validate()?;
    check_witness(p, eps)?;
    let a = -1.0 / p - eps;
    let (k, truncation) = match w {
        DiscreteWeight::Finite { r, .. } => (r.len(), 0.0),
        DiscreteWeight::Geometric { rho, scale, theta } => {
            let q = theta * rho.powf(-1.0 / p);
            if q < 1.0 {
                let tail = |k: usize| scale * q.powi(k as i32 + 1) / (1.0 - q);
                let k = (1..=100_000).find(|k| tail(*k) < tol).ok_or_else(|| {
                    Error::TailUnavailable("discrete L^p tail does not reach the tolerance".into())
                })?;
                (k, tail(k))
            } else {
                (DIVERGENT_DEPTH, f64::INFINITY)
            }
        }
    };
    let r: Vec<f64> = (1..=k).map(|i| w.r(i)).collect();
    let phi: Vec<f64> = (1..=k).map(|i| w.phi(i)).collect();
    let s_k = stable_sum(r.iter().zip(&phi).map(|(r, f)| f * r.powf(a)).collect());
    let image = |x: f64| -> f64 {
        let mut acc = 0.0;
        for (ri, fi) in r.iter().zip(&phi) {
            let y = ri * x;
            if y > 1.0 {
                acc += fi * y.powf(a);
            }
        }
        acc
    };
    let cut = -r[k - 1].ln();
    let breaks: Vec<f64> = r[..k - 1].iter().map(|v| -v.ln()).collect();
    let head = integrate(|u| image(u.exp()).powf(p) * u.exp(), 0.0, cut, &breaks, QuadTol::new(1e-15, 1e-13))?;
    let tail = s_k.powf(p) * (-p * eps * cut).exp() / (p * eps);
    let total = p * eps * (head.value + tail);
    Ok(LpRatio {
        eps,
        value: total.powf(1.0 / p),
        quad_error: root_error(total, p * eps * head.error, p),
        truncation,
        terms: k,
    })
}

/// Ratio for the one-dimensional continuous operator. For `x > 1`,
/// `ℍ f_ε(x) = x^a G(1/x)` with `a = -1/p - ε` and `G(s) = ∫_s^1 t^a φ(t) dt`. The norm is
/// integrated in `u = ln x` up to `X = 2^100`; beyond it `G(1/x)` lies in `[G(1/X), G(0)]`,
/// which brackets the remainder.
pub fn continuous_lp_ratio(w: &ContinuousWeight, p: f64, eps: f64, tol: f64) -> Result<LpRatio> {
    w.validate()?;
    check_witness(p, eps)?;
    if w.dim() != 1 {
        return Err(Error::invalid("the continuous L^p witness is one-dimensional"));
    }
    let a = -1.0 / p - eps;
    let (scale, axes) = w.separable();
    let terms: Vec<Monomial> = axes.into_iter().next().expect("one axis");
    let g = |s: f64| -> Option<f64> {
        let mut acc = 0.0;
        for m in &terms {
            acc += integrate_power(m.coef, m.gamma + a, s.max(m.lo), m.hi)?;
        }
        Some(scale * acc)
    };
    let g0 = g(0.0);
    let cut = CONTINUOUS_CUT_LOG2 * std::f64::consts::LN_2;
    let mut breaks: Vec<f64> = terms.iter().flat_map(|m| [m.lo, m.hi]).filter(|t| *t > 0.0 && *t < 1.0).map(|t| -t.ln()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let head = integrate(
        |u| (-p * eps * u).exp() * g((-u).exp()).unwrap_or(f64::INFINITY).powf(p),
        0.0,
        cut,
        &breaks,
        QuadTol::new(tol, 1e-13),
    )?;
    let g_cut = g((-cut).exp()).ok_or_else(|| Error::NotIntegrable("weight moment diverges inside (0, 1]".into()))?;
    let decay = (-p * eps * cut).exp() / (p * eps);
    let low = p * eps * (head.value + g_cut.powf(p) * decay);
    let tail_hi = match g0 {
        Some(g0) => g0.powf(p) * decay,
        None => match near_zero_sup(scale, &terms) {
            Some(m) => {
                // G(1/x) ≤ G(1/X) + M ∫_{1/x}^{1/X} t^a dt, then Minkowski.
                let c = -(a + 1.0);
                let spread = if c > 0.0 {
                    if eps > c {
                        ((-p * (eps - c) * cut).exp() / (p * (eps - c))).powf(1.0 / p) / c
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let gamma = (1..=p.ceil() as u32).map(f64::from).product::<f64>();
                    ((-p * eps * cut).exp() * gamma / (p * eps).powf(p + 1.0)).powf(1.0 / p)
                };
                ((g_cut.powf(p) * decay).powf(1.0 / p) + m * spread).powf(p)
            }
            None => f64::INFINITY,
        },
    };
    let high = p * eps * (head.value + tail_hi);
    let value = low.powf(1.0 / p);
    Ok(LpRatio { eps, value, quad_error: root_error(low, p * eps * head.error, p), truncation: high.powf(1.0 / p) - value, terms: 1 })
}

/// Upper bound for `φ` on a neighbourhood of 0, when its pieces there have no negative powers.
fn near_zero_sup(scale: f64, terms: &[Monomial]) -> Option<f64> {
    let mut acc = 0.0;
    for m in terms.iter().filter(|m| m.lo <= 0.0) {
        if m.gamma < 0.0 {
            return None;
        }
        acc += m.coef.abs() * m.hi.powf(m.gamma);
    }
    Some(scale * acc)
}

/// A per-member norm ratio `‖Tf‖ / ‖f‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRatio {
    pub member: String,
    pub param: String,
    pub source: f64,
    pub target: f64,
    pub ratio: f64,
    /// Bound on how far `ratio` may be off in either direction.
    pub error: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberError {
    pub member: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNormReport {
    pub kind: OpKind,
    pub formula: FormulaValue,
    /// Largest ratio over the corpus or the witness sweep.
    pub empirical: f64,
    pub witness: String,
    /// `formula - empirical`.
    pub gap: f64,
    pub members: Vec<MemberRatio>,
    pub errors: Vec<MemberError>,
}

/// The operator image of `f` for the `𝔅^p` and `CMO^p` kinds.
pub fn image_for(kind: OpKind, weight: &WeightSpec, f: &FunctionSpec, tol: f64) -> Result<Image> {
    match (kind, weight) {
        (OpKind::GridBp, WeightSpec::Grid(w)) => {
            if f.tensor_terms().is_none() {
                return Err(Error::NeedsOracle("no tensor expansion; the grid image is not tractable".into()));
            }
            grid_image(f, w, tol)
        }
        (OpKind::ContinuousBp | OpKind::ContinuousCmo, WeightSpec::Continuous(w)) => continuous_image(f, w),
        _ => Err(Error::invalid(format!("{} has no function-space image", kind.name()))),
    }
}

fn ratio_of(source: &NormEstimate, target: &NormEstimate, uniform: f64) -> (f64, f64) {
    let ratio = target.value / source.value;
    let hi = (target.value + target.error_bound + uniform) / (source.value - source.error_bound).max(f64::MIN_POSITIVE);
    let lo = (target.value - target.error_bound).max(0.0) / (source.value + source.error_bound);
    (ratio, (hi - ratio).max(ratio - lo))
}

/// Is this error something to stop for rather than record?
pub(crate) fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::BudgetExceeded { .. } | Error::Io(_))
}

fn grid_as_discrete(w: &GridWeight) -> Result<DiscreteWeight> {
    match w {
        GridWeight::Product { rho, scale, theta } if rho.len() == 1 => Ok(DiscreteWeight::geometric(rho[0], *scale, theta[0])),
        GridWeight::Diagonal { rho, scale, theta } if rho.len() == 1 => Ok(DiscreteWeight::geometric(rho[0], *scale, *theta)),
        GridWeight::Finite { r, entries } if r.len() == 1 => {
            let mut pairs: Vec<(f64, f64)> = entries.iter().map(|e| (r[0][e.index[0] - 1], e.phi)).collect();
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
            Ok(DiscreteWeight::Finite { r: pairs.iter().map(|p| p.0).collect(), phi: pairs.iter().map(|p| p.1).collect() })
        }
        _ => Err(Error::invalid("empirical grid L^p ratios are available in one dimension only")),
    }
}

/// Largest ratio `‖Tf‖/‖f‖` over the witness sweep (`L^p` kinds) or the corpus (`𝔅^p`, `CMO^p`).
/// Per-member failures are recorded in the report.
pub fn empirical_opnorm(
    kind: OpKind,
    weight: &WeightSpec,
    corpus: &[CorpusMember],
    params: &NormParams,
    eps_sweep: &[f64],
    tol: f64,
) -> Result<OpNormReport> {
    let p = params.p;
    let n = match weight {
        WeightSpec::Discrete(_) => corpus.first().map_or(1, |m| m.function.dim().unwrap_or(1)),
        WeightSpec::Grid(w) => w.dim(),
        WeightSpec::Continuous(w) => w.dim(),
    };
    let formula = opnorm_formula(kind, weight, p, n)?;
    let mut members = Vec::new();
    let mut errors = Vec::new();
    let mut witness = String::new();
    match kind {
        OpKind::DiscreteLp | OpKind::GridLp | OpKind::ContinuousLp => {
            if n != 1 {
                return Err(Error::invalid("empirical L^p ratios are available in one dimension only"));
            }
            witness = "f_eps".into();
            for &eps in eps_sweep {
                let r = match (kind, weight) {
                    (OpKind::DiscreteLp, WeightSpec::Discrete(w)) => discrete_lp_ratio(w, p, eps, tol),
                    (OpKind::GridLp, WeightSpec::Grid(w)) => grid_as_discrete(w).and_then(|d| discrete_lp_ratio(&d, p, eps, tol)),
                    (OpKind::ContinuousLp, WeightSpec::Continuous(w)) => continuous_lp_ratio(w, p, eps, tol),
                    _ => return Err(Error::invalid("weight does not match the operator kind")),
                };
                match r {
                    Ok(r) => members.push(MemberRatio {
                        member: "f_eps".into(),
                        param: format!("eps={eps}"),
                        source: (2.0 / (p * eps)).powf(1.0 / p),
                        target: r.value * (2.0 / (p * eps)).powf(1.0 / p),
                        ratio: r.value,
                        error: r.quad_error + r.truncation,
                        converged: r.truncation.is_finite(),
                    }),
                    Err(e) if is_fatal(&e) => return Err(e),
                    Err(e) => errors.push(MemberError { member: format!("f_eps(eps={eps})"), message: e.to_string() }),
                }
            }
        }
        OpKind::GridBp | OpKind::ContinuousBp | OpKind::ContinuousCmo => {
            let norm = |f: &dyn Field| if kind == OpKind::ContinuousCmo { cmo_norm(f, params) } else { bp_rect_norm(f, params) };
            for m in corpus {
                let outcome = (|| -> Result<MemberRatio> {
                    let image = image_for(kind, weight, &m.function, tol)?;
                    let source = norm(&m.function)?;
                    if source.value <= source.error_bound {
                        return Err(Error::invalid("source norm is zero; excluded"));
                    }
                    let target = norm(&image)?;
                    let (ratio, error) = ratio_of(&source, &target, image.uniform_error);
                    Ok(MemberRatio {
                        member: m.id.clone(),
                        param: format!("p={p}"),
                        source: source.value,
                        target: target.value,
                        ratio,
                        error,
                        converged: source.converged && target.converged,
                    })
                })();
                match outcome {
                    Ok(r) => members.push(r),
                    Err(e) if is_fatal(&e) => return Err(e),
                    Err(e) => errors.push(MemberError { member: m.id.clone(), message: e.to_string() }),
                }
            }
        }
    }
    let best = members.iter().map(|m| m.ratio).fold(f64::NEG_INFINITY, f64::max);
    if witness.is_empty() {
        witness = members.iter().find(|m| m.ratio == best).map_or(String::new(), |m| m.member.clone());
    }
    let empirical = if members.is_empty() { f64::NAN } else { best };
    Ok(OpNormReport { kind, gap: formula.value - empirical, formula, empirical, witness, members, errors })
}
