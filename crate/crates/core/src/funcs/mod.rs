//! Test functions with pointwise evaluation and rectangle integrals of `|f|^p`.
//!
//! Every variant evaluates in closed form. Integrals over centered rectangles are exact for
//! constants, indicators, the cross staircase, tensor products of piecewise formulas, and for
//! dilations and piecewise-constant combinations of these. Radial power tails in two or more
//! dimensions go through iterated adaptive quadrature and carry an error estimate.

mod integrate;
pub mod piecewise;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use piecewise::{Formula, Piece, Piecewise1D};

pub const MAX_DIM: usize = 3;

/// Axis-aligned rectangle `[-R_1, R_1] × … × [-R_n, R_n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Rect {
    half_widths: Vec<f64>,
}

impl Rect {
    pub fn new(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() || half_widths.len() > MAX_DIM {
            return Err(Error::invalid(format!("rectangle dimension must be 1..={MAX_DIM}, got {}", half_widths.len())));
        }
        if let Some(r) = half_widths.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!("half-widths must be positive and finite, got {r}")));
        }
        Ok(Rect { half_widths })
    }

    pub fn cube(n: usize, r: f64) -> Result<Self> {
        Rect::new(vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// Lebesgue measure `Π 2R_i`.
    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|r| 2.0 * r).product()
    }

    /// `Π R_i`.
    pub fn half_width_product(&self) -> f64 {
        self.half_widths.iter().product()
    }

    /// Rectangle with half-widths `t_i R_i`.
    pub fn scaled(&self, t: &[f64]) -> Result<Rect> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.len() });
        }
        Rect::new(self.half_widths.iter().zip(t).map(|(r, s)| r * s).collect())
    }

    pub fn contains(&self, other: &Rect) -> bool {
        self.dim() == other.dim() && self.half_widths.iter().zip(&other.half_widths).all(|(a, b)| b <= a)
    }
}

impl TryFrom<Vec<f64>> for Rect {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Rect::new(v)
    }
}

impl From<Rect> for Vec<f64> {
    fn from(r: Rect) -> Self {
        r.half_widths
    }
}

/// An integral value with an absolute error estimate; `error == 0` marks a closed-form value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl Integral {
    pub const ZERO: Integral = Integral { value: 0.0, error: 0.0 };

    pub fn exact(value: f64) -> Self {
        Integral { value, error: 0.0 }
    }

    pub fn is_exact(&self) -> bool {
        self.error == 0.0
    }

    pub fn scale(self, c: f64) -> Self {
        Integral { value: self.value * c, error: self.error * c.abs() }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl std::ops::Sub for Integral {
    type Output = Integral;
    fn sub(self, rhs: Integral) -> Integral {
        Integral { value: self.value - rhs.value, error: self.error + rhs.error }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub function: FunctionSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        c: f64,
        dim: usize,
    },
    /// `Π_i g_i(x_i)`, one piecewise factor per axis.
    TensorPiecewise {
        factors: Vec<Piecewise1D>,
    },
    /// `|x|^exponent` for `|x| > 1`, zero inside the closed unit ball.
    RadialPowerTail {
        exponent: f64,
        dim: usize,
    },
    /// Planar cross of bands: `1` on `[-1,1]²`, `k^{1/p_root}` where one coordinate lies in
    /// `[-1,1]` and the other has absolute value in `(k-1, k]`, zero off the cross.
    /// `max_band` truncates the staircase to bands `k ≤ max_band`.
    StaircaseCross {
        p_root: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_band: Option<u32>,
    },
    /// Indicator of `{x_axis > 0}`.
    IndicatorHalfSpace {
        axis: usize,
        dim: usize,
    },
    /// `x ↦ inner(t_1 x_1, …, t_n x_n)`.
    AxisScaled {
        inner: Box<FunctionSpec>,
        scale: Vec<f64>,
    },
    LinearCombo {
        terms: Vec<Term>,
    },
}

/// One axis of a tensor-product function: `x ↦ factor(scale · x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor1D {
    pub factor: Piecewise1D,
    pub scale: f64,
}

impl Factor1D {
    pub fn eval(&self, x: f64) -> f64 {
        self.factor.eval(self.scale * x)
    }
}

impl FunctionSpec {
    pub fn constant(c: f64, dim: usize) -> Self {
        FunctionSpec::Constant { c, dim }
    }

    pub fn staircase(p_root: f64) -> Self {
        FunctionSpec::StaircaseCross { p_root, max_band: None }
    }

    pub fn half_space(axis: usize, dim: usize) -> Self {
        FunctionSpec::IndicatorHalfSpace { axis, dim }
    }

    pub fn tensor(factors: Vec<Piecewise1D>) -> Self {
        FunctionSpec::TensorPiecewise { factors }
    }

    /// Indicator of the cube `[-r, r]^n`.
    pub fn cube_indicator(n: usize, r: f64) -> Self {
        FunctionSpec::tensor(vec![Piecewise1D::constant_on(-r, r, 1.0); n])
    }

    /// `f_ε(x) = |x|^{-n/p - ε} χ_{|x| > 1}`, the L^p extremal family.
    pub fn power_tail_witness(n: usize, p: f64, eps: f64) -> Self {
        FunctionSpec::RadialPowerTail { exponent: -(n as f64) / p - eps, dim: n }
    }

    pub fn scaled(self, scale: Vec<f64>) -> Self {
        FunctionSpec::AxisScaled { inner: Box::new(self), scale }
    }

    pub fn combo(terms: Vec<(f64, FunctionSpec)>) -> Self {
        FunctionSpec::LinearCombo { terms: terms.into_iter().map(|(coef, function)| Term { coef, function }).collect() }
    }

    /// Dimension, after checking every structural constraint of the variant.
    pub fn dim(&self) -> Result<usize> {
        let check = |n: usize| {
            if (1..=MAX_DIM).contains(&n) {
                Ok(n)
            } else {
                Err(Error::invalid(format!("dimension must be 1..={MAX_DIM}, got {n}")))
            }
        };
        match self {
            FunctionSpec::Constant { c, dim } => {
                finite(*c, "constant")?;
                check(*dim)
            }
            FunctionSpec::TensorPiecewise { factors } => {
                for f in factors {
                    f.validate()?;
                }
                check(factors.len())
            }
            FunctionSpec::RadialPowerTail { exponent, dim } => {
                finite(*exponent, "exponent")?;
                check(*dim)
            }
            FunctionSpec::StaircaseCross { p_root, .. } => {
                if !(p_root.is_finite() && *p_root >= 1.0) {
                    return Err(Error::invalid(format!("staircase p_root must be >= 1, got {p_root}")));
                }
                Ok(2)
            }
            FunctionSpec::IndicatorHalfSpace { axis, dim } => {
                let n = check(*dim)?;
                if *axis >= n {
                    return Err(Error::invalid(format!("half-space axis {axis} out of range for dimension {n}")));
                }
                Ok(n)
            }
            FunctionSpec::AxisScaled { inner, scale } => {
                let n = inner.dim()?;
                if scale.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: scale.len() });
                }
                if let Some(t) = scale.iter().find(|t| !(t.is_finite() && **t > 0.0 && **t <= 1.0)) {
                    return Err(Error::invalid(format!("axis scale factors must lie in (0, 1], got {t}")));
                }
                Ok(n)
            }
            FunctionSpec::LinearCombo { terms } => {
                let first = terms.first().ok_or_else(|| Error::invalid("linear combination needs at least one term"))?;
                let n = first.function.dim()?;
                for t in terms {
                    finite(t.coef, "coefficient")?;
                    let m = t.function.dim()?;
                    if m != n {
                        return Err(Error::DimensionMismatch { expected: n, got: m });
                    }
                }
                Ok(n)
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim()?;
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Pointwise value without validation; `x.len()` must equal the dimension.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            FunctionSpec::Constant { c, .. } => *c,
            FunctionSpec::TensorPiecewise { factors } => {
                let mut acc = 1.0;
                for (g, xi) in factors.iter().zip(x) {
                    acc *= g.eval(*xi);
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
            FunctionSpec::RadialPowerTail { exponent, .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 > 1.0 {
                    r2.powf(0.5 * exponent)
                } else {
                    0.0
                }
            }
            FunctionSpec::StaircaseCross { p_root, max_band } => {
                let (a, b) = (x[0].abs(), x[1].abs());
                let band = if a <= 1.0 && b <= 1.0 {
                    1.0
                } else if a <= 1.0 {
                    b.ceil()
                } else if b <= 1.0 {
                    a.ceil()
                } else {
                    return 0.0;
                };
                if max_band.is_some_and(|m| band > m as f64) {
                    return 0.0;
                }
                band.powf(1.0 / p_root)
            }
            FunctionSpec::IndicatorHalfSpace { axis, .. } => {
                if x[*axis] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionSpec::AxisScaled { inner, scale } => {
                let mut y = [0.0; MAX_DIM];
                for (i, (xi, t)) in x.iter().zip(scale).enumerate() {
                    y[i] = xi * t;
                }
                inner.eval_unchecked(&y[..x.len()])
            }
            FunctionSpec::LinearCombo { terms } => terms.iter().map(|t| t.coef * t.function.eval_unchecked(x)).sum(),
        }
    }

    /// Upper bound for `|f|` on the centered box with the given half-widths.
    /// `None` when no finite bound is available.
    pub fn sup_abs_on_box(&self, half: &[f64]) -> Option<f64> {
        let bound = match self {
            FunctionSpec::Constant { c, .. } => c.abs(),
            FunctionSpec::IndicatorHalfSpace { .. } => 1.0,
            FunctionSpec::StaircaseCross { p_root, max_band } => {
                let mut band = half[0].max(half[1]).ceil().max(1.0);
                if let Some(m) = max_band {
                    band = band.min(*m as f64).max(1.0);
                }
                band.powf(1.0 / p_root)
            }
            FunctionSpec::TensorPiecewise { factors } => factors.iter().zip(half).map(|(g, h)| g.sup_abs(-h, *h)).product(),
            FunctionSpec::RadialPowerTail { exponent, .. } => {
                let reach = half.iter().map(|h| h * h).sum::<f64>().sqrt();
                if reach <= 1.0 {
                    0.0
                } else if *exponent <= 0.0 {
                    1.0
                } else {
                    reach.powf(*exponent)
                }
            }
            FunctionSpec::AxisScaled { inner, scale } => {
                let h: Vec<f64> = half.iter().zip(scale).map(|(h, t)| h * t).collect();
                inner.sup_abs_on_box(&h)?
            }
            FunctionSpec::LinearCombo { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.coef.abs() * t.function.sup_abs_on_box(half)?;
                }
                acc
            }
        };
        bound.is_finite().then_some(bound)
    }

    /// Global bound for `|f|` on the whole space, when one exists.
    pub fn sup_abs(&self) -> Option<f64> {
        let n = self.dim().ok()?;
        self.sup_abs_on_box(&vec![f64::INFINITY; n])
    }

    /// Points along `axis` inside `(lo, hi)` where `f` may fail to be smooth, given the
    /// coordinates `fixed` of the preceding axes.
    pub fn axis_breaks(&self, axis: usize, fixed: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.push_breaks(axis, fixed, lo, hi, &mut out);
        out.retain(|x| *x > lo && *x < hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn push_breaks(&self, axis: usize, fixed: &[f64], lo: f64, hi: f64, out: &mut Vec<f64>) {
        match self {
            FunctionSpec::Constant { .. } => {}
            FunctionSpec::IndicatorHalfSpace { axis: a, .. } => {
                if *a == axis {
                    out.push(0.0);
                }
            }
            FunctionSpec::StaircaseCross { .. } => {
                let first = lo.max(-1e6).ceil() as i64;
                let last = hi.min(1e6).floor() as i64;
                out.extend((first..=last).map(|k| k as f64));
            }
            FunctionSpec::TensorPiecewise { factors } => out.extend(factors[axis].breakpoints(lo, hi)),
            FunctionSpec::RadialPowerTail { .. } => {
                out.push(0.0);
                let rest = 1.0 - fixed.iter().map(|v| v * v).sum::<f64>();
                if rest > 0.0 {
                    let s = rest.sqrt();
                    out.extend([-s, s]);
                }
            }
            FunctionSpec::AxisScaled { inner, scale } => {
                let t = scale[axis];
                let y: Vec<f64> = fixed.iter().zip(scale).map(|(x, s)| x * s).collect();
                let mut inner_breaks = Vec::new();
                inner.push_breaks(axis, &y, t * lo, t * hi, &mut inner_breaks);
                out.extend(inner_breaks.into_iter().map(|b| b / t));
            }
            FunctionSpec::LinearCombo { terms } => {
                for term in terms {
                    term.function.push_breaks(axis, fixed, lo, hi, out);
                }
            }
        }
    }

    /// Breakpoints along `axis` inside `(lo, hi)` when `f` is piecewise constant on the grid
    /// they generate; `None` otherwise.
    pub fn constant_breaks(&self, axis: usize, lo: f64, hi: f64) -> Option<Vec<f64>> {
        let mut out = match self {
            FunctionSpec::Constant { .. } => Vec::new(),
            FunctionSpec::IndicatorHalfSpace { axis: a, .. } => {
                if *a == axis {
                    vec![0.0]
                } else {
                    Vec::new()
                }
            }
            FunctionSpec::StaircaseCross { max_band, .. } => {
                let cap = max_band.map_or(f64::INFINITY, |m| m as f64);
                let first = lo.max(-cap).ceil() as i64;
                let last = hi.min(cap).floor() as i64;
                (first..=last).map(|k| k as f64).collect()
            }
            FunctionSpec::TensorPiecewise { factors } => factors[axis].constant_breakpoints(lo, hi)?,
            FunctionSpec::RadialPowerTail { .. } => return None,
            FunctionSpec::AxisScaled { inner, scale } => {
                let t = scale[axis];
                inner.constant_breaks(axis, t * lo, t * hi)?.into_iter().map(|b| b / t).collect()
            }
            FunctionSpec::LinearCombo { terms } => {
                let mut all = Vec::new();
                for term in terms {
                    all.extend(term.function.constant_breaks(axis, lo, hi)?);
                }
                all
            }
        };
        out.retain(|x| *x > lo && *x < hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        Some(out)
    }

    /// Tensor-product form `coef · Π_i factor_i(scale_i x_i)`, when `f` has one.
    pub fn tensor_factors(&self) -> Option<(f64, Vec<Factor1D>)> {
        let n = self.dim().ok()?;
        let ones = || vec![Factor1D { factor: Piecewise1D::one(), scale: 1.0 }; n];
        match self {
            FunctionSpec::Constant { c, .. } => Some((*c, ones())),
            FunctionSpec::IndicatorHalfSpace { axis, .. } => {
                let mut f = ones();
                f[*axis].factor = Piecewise1D { pieces: vec![Piece::new(0.0, f64::INFINITY, Formula::constant(1.0))] };
                Some((1.0, f))
            }
            FunctionSpec::TensorPiecewise { factors } => {
                Some((1.0, factors.iter().map(|g| Factor1D { factor: g.clone(), scale: 1.0 }).collect()))
            }
            FunctionSpec::RadialPowerTail { exponent, dim: 1 } => {
                let power = Formula::Power { coef: 1.0, exponent: *exponent };
                let pieces = vec![
                    Piece::new(f64::NEG_INFINITY, -1.0, power.clone()),
                    Piece::new(1.0, f64::INFINITY, power),
                ];
                Some((1.0, vec![Factor1D { factor: Piecewise1D { pieces }, scale: 1.0 }]))
            }
            FunctionSpec::AxisScaled { inner, scale } => {
                let (c, mut factors) = inner.tensor_factors()?;
                for (f, t) in factors.iter_mut().zip(scale) {
                    f.scale *= t;
                }
                Some((c, factors))
            }
            FunctionSpec::LinearCombo { terms } if terms.len() == 1 => {
                let (c, factors) = terms[0].function.tensor_factors()?;
                Some((c * terms[0].coef, factors))
            }
            _ => None,
        }
    }

    /// Expansion as a finite sum of tensor products, when one exists. Covers everything
    /// [`Self::tensor_factors`] does plus linear combinations and the truncated staircase.
    /// Terms may overlap on sets of measure zero.
    pub fn tensor_terms(&self) -> Option<Vec<(f64, Vec<Factor1D>)>> {
        if let Some(t) = self.tensor_factors() {
            return Some(vec![t]);
        }
        match self {
            FunctionSpec::LinearCombo { terms } => {
                let mut out = Vec::new();
                for term in terms {
                    for (c, f) in term.function.tensor_terms()? {
                        out.push((c * term.coef, f));
                    }
                }
                Some(out)
            }
            FunctionSpec::AxisScaled { inner, scale } => {
                let mut out = inner.tensor_terms()?;
                for (_, factors) in &mut out {
                    for (f, t) in factors.iter_mut().zip(scale) {
                        f.scale *= t;
                    }
                }
                Some(out)
            }
            FunctionSpec::StaircaseCross { p_root, max_band: Some(m) } => {
                let wrap = |g: Piecewise1D| Factor1D { factor: g, scale: 1.0 };
                let core = || wrap(Piecewise1D::constant_on(-1.0, 1.0, 1.0));
                let mut out = vec![(1.0, vec![core(), core()])];
                for k in 2..=*m {
                    let k = k as f64;
                    let band = Piecewise1D {
                        pieces: vec![
                            Piece::new(-k, 1.0 - k, Formula::constant(1.0)),
                            Piece::new(k - 1.0, k, Formula::constant(1.0)),
                        ],
                    };
                    let v = k.powf(1.0 / p_root);
                    out.push((v, vec![core(), wrap(band.clone())]));
                    out.push((v, vec![wrap(band), core()]));
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Radius of a centered ball containing the support, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            FunctionSpec::Constant { c, .. } => (*c == 0.0).then_some(0.0),
            FunctionSpec::TensorPiecewise { factors } => {
                let mut r2 = 0.0;
                for g in factors {
                    let e = g.support_extent()?;
                    if e == 0.0 {
                        return Some(0.0);
                    }
                    r2 += e * e;
                }
                Some(r2.sqrt())
            }
            FunctionSpec::StaircaseCross { max_band: Some(m), .. } => Some(((*m as f64).powi(2) + 1.0).sqrt()),
            FunctionSpec::AxisScaled { inner, scale } => {
                let t = scale.iter().copied().fold(f64::INFINITY, f64::min);
                Some(inner.support_radius()? / t)
            }
            FunctionSpec::LinearCombo { terms } => {
                terms.iter().try_fold(0.0f64, |acc, t| Some(acc.max(t.function.support_radius()?)))
            }
            _ => None,
        }
    }

    /// True when `f ≥ 0` can be read off the structure; `false` is inconclusive.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            FunctionSpec::Constant { c, .. } => *c >= 0.0,
            FunctionSpec::IndicatorHalfSpace { .. } | FunctionSpec::StaircaseCross { .. } | FunctionSpec::RadialPowerTail { .. } => true,
            FunctionSpec::TensorPiecewise { factors } => factors.iter().all(Piecewise1D::is_nonnegative),
            FunctionSpec::AxisScaled { inner, .. } => inner.is_nonnegative(),
            FunctionSpec::LinearCombo { terms } => terms.iter().all(|t| t.coef >= 0.0 && t.function.is_nonnegative()),
        }
    }

    /// True when `f` is constant on the cells cut by its axis breakpoints.
    pub fn is_piecewise_constant(&self) -> bool {
        match self {
            FunctionSpec::Constant { .. } | FunctionSpec::IndicatorHalfSpace { .. } | FunctionSpec::StaircaseCross { .. } => true,
            FunctionSpec::TensorPiecewise { factors } => {
                factors.iter().all(|g| g.pieces.iter().all(|p| p.formula.as_constant().is_some()))
            }
            FunctionSpec::RadialPowerTail { .. } => false,
            FunctionSpec::AxisScaled { inner, .. } => inner.is_piecewise_constant(),
            FunctionSpec::LinearCombo { terms } => terms.iter().all(|t| t.function.is_piecewise_constant()),
        }
    }
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite, got {v}")))
    }
}

/// Pointwise evaluation with dimension checking.
pub fn evaluate(f: &FunctionSpec, x: &[f64]) -> Result<f64> {
    f.evaluate(x)
}

/// `∫_r |f|^p dx`, closed form where available, quadrature-backed for radial tails in
/// dimension two or more. Unsupported combinations report `Error::NeedsOracle`.
pub fn rect_integral_abs_p(f: &FunctionSpec, p: f64, r: &Rect) -> Result<Integral> {
    integrate::abs_p(f, p, r)
}

pub use integrate::{numeric_rect_integral, piecewise_cells, signed_integral};

/// `Σ g(value) · volume` over constant cells, pairwise summed.
pub fn cell_sum(cells: &[(f64, f64)], g: impl Fn(f64) -> f64) -> f64 {
    integrate::cell_sum(cells, g)
}

#[cfg(test)]
mod tests;
