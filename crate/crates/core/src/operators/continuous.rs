use crate::error::{Error, Result};
use crate::field::{Field, FALLBACK_TOL};
use crate::funcs::{Factor1D, Formula, FunctionSpec, Integral, Rect};
use crate::numeric::stable_sum;
use crate::quad::{integrate, integrate_box, QuadTol};

use super::image::{Image, TensorField, TensorSum};
use super::weights::{integrate_power, ContinuousWeight, Monomial};
use super::Applied;

/// `∫_0^1 g(s t x) w(t) dt` for one axis, in closed form. Returns the value and the sum of
/// absolute contributions (for a rounding estimate).
pub fn transform_1d(g: &Factor1D, w: &[Monomial], x: f64) -> Result<(f64, f64)> {
    let y = g.scale * x;
    if y == 0.0 {
        let mass: f64 = w.iter().map(|m| m.moment(0.0).unwrap_or(f64::NAN)).sum();
        let v = g.factor.eval(0.0) * mass;
        return Ok((v, v.abs()));
    }
    let mut parts = Vec::new();
    for m in w {
        for piece in &g.factor.pieces {
            let (a, b) = if y > 0.0 { (piece.lo / y, piece.hi / y) } else { (piece.hi / y, piece.lo / y) };
            let (t1, t2) = (a.max(m.lo), b.min(m.hi));
            if !(t1 < t2) {
                continue;
            }
            match &piece.formula {
                Formula::Poly { coeffs } => {
                    let mut yj = 1.0;
                    for (j, c) in coeffs.iter().enumerate() {
                        if *c != 0.0 {
                            let i = integrate_power(m.coef, m.gamma + j as f64, t1, t2)
                                .ok_or_else(|| Error::NotIntegrable("density moment diverges".into()))?;
                            parts.push(c * yj * i);
                        }
                        yj *= y;
                    }
                }
                Formula::Power { coef, exponent } => {
                    let i = integrate_power(m.coef, m.gamma + exponent, t1, t2).ok_or_else(|| {
                        Error::NotIntegrable(format!("t^{} is not integrable at 0", m.gamma + exponent))
                    })?;
                    parts.push(coef * y.abs().powf(*exponent) * i);
                }
            }
        }
    }
    let mag = parts.iter().map(|v| v.abs()).sum();
    Ok((stable_sum(parts), mag))
}

/// Closed-form value of the continuous operator when `f` expands into tensor terms.
fn exact_transform(f: &FunctionSpec, w: &ContinuousWeight, x: &[f64]) -> Option<Result<(f64, f64)>> {
    let terms = f.tensor_terms()?;
    let (scale, axes) = w.separable();
    let eval = || -> Result<(f64, f64)> {
        let mut values = Vec::with_capacity(terms.len());
        let mut mag = 0.0;
        for (coef, factors) in &terms {
            let mut v = coef * scale;
            let mut m = v.abs();
            for ((g, wa), xi) in factors.iter().zip(&axes).zip(x) {
                let (a, b) = transform_1d(g, wa, *xi)?;
                v *= a;
                m *= b;
            }
            values.push(v);
            mag += m;
        }
        Ok((stable_sum(values), mag))
    };
    Some(eval())
}

/// `∫_{[0,1]^n} f(t ∘ x) φ(t) dt`. Tensor-expandable `f` is transformed in closed form; other
/// functions go through iterated quadrature with absolute tolerance `tol`.
pub fn apply_continuous(f: &FunctionSpec, w: &ContinuousWeight, x: &[f64], tol: f64) -> Result<Applied> {
    w.validate()?;
    let n = f.dim()?;
    if x.len() != n || w.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: if x.len() != n { x.len() } else { w.dim() } });
    }
    if let Some(res) = exact_transform(f, w, x) {
        let (value, mag) = res?;
        return Ok(Applied { value, error_bound: 16.0 * f64::EPSILON * mag, terms: 1 });
    }
    let integrand = |t: &[f64]| {
        let mut y = [0.0; crate::funcs::MAX_DIM];
        for i in 0..n {
            y[i] = t[i] * x[i];
        }
        f.eval_unchecked(&y[..n]) * w.eval(t)
    };
    let breaks = |axis: usize, fixed: &[f64], lo: f64, hi: f64| {
        let mut out = w.breakpoints(axis);
        let xi = x[axis];
        if xi != 0.0 {
            let y: Vec<f64> = fixed.iter().zip(x).map(|(t, x)| t * x).collect();
            let (a, b) = if xi > 0.0 { (lo * xi, hi * xi) } else { (hi * xi, lo * xi) };
            out.extend(f.axis_breaks(axis, &y, a, b).into_iter().map(|u| u / xi));
        }
        out.retain(|t| *t > lo && *t < hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    };
    let res = integrate_box(&integrand, &vec![0.0; n], &vec![1.0; n], &breaks, QuadTol::new(tol, 0.0))?;
    Ok(Applied { value: res.value, error_bound: res.error, terms: 1 })
}

/// `F(x)/x` with `F(x) = ∫_0^x f`, by adaptive quadrature in the original variable.
pub fn hardy_classic(f: &FunctionSpec, x: f64, tol: f64) -> Result<Applied> {
    if f.dim()? != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim()? });
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!("the classical average needs x > 0, got {x}")));
    }
    let breaks = f.axis_breaks(0, &[], 0.0, x);
    let res = integrate(|t| f.eval_unchecked(&[t]), 0.0, x, &breaks, QuadTol::new(tol * x, 0.0))?;
    Ok(Applied { value: res.value / x, error_bound: res.error / x, terms: 1 })
}

/// `x ↦ ∫_0^1 g(s t x) w(t) dt` as a one-dimensional field.
pub struct ContinuousFactor {
    g: Factor1D,
    w: Vec<Monomial>,
    /// Break locations in `x` where the transform may have kinks.
    kinks: Vec<f64>,
    mass: f64,
}

impl ContinuousFactor {
    pub fn new(g: Factor1D, w: Vec<Monomial>) -> Result<Self> {
        for x in [-1.0, 1.0] {
            transform_1d(&g, &w, x)?;
        }
        let mut ends: Vec<f64> = w.iter().flat_map(|m| [m.lo, m.hi]).filter(|t| *t > 0.0).collect();
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let mut kinks = vec![0.0];
        for p in &g.factor.pieces {
            for u in [p.lo, p.hi] {
                if u.is_finite() && u != 0.0 {
                    kinks.extend(ends.iter().map(|t| u / (g.scale * t)));
                }
            }
        }
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        let mass = w.iter().map(|m| m.moment(0.0).unwrap_or(f64::INFINITY).abs()).sum();
        Ok(ContinuousFactor { g, w, kinks, mass })
    }

    fn quad(&self, r: &Rect, h: impl Fn(f64) -> f64) -> Result<Integral> {
        let half = r.half_widths()[0];
        let breaks = self.axis_breaks(0, &[], -half, half);
        let res = integrate(h, -half, half, &breaks, FALLBACK_TOL)?;
        Ok(Integral { value: res.value, error: res.error.max(f64::EPSILON * res.value.abs()) })
    }
}

impl Field for ContinuousFactor {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        transform_1d(&self.g, &self.w, x[0]).map_or(f64::NAN, |v| v.0)
    }

    fn integral_abs_p(&self, r: &Rect, p: f64) -> Result<Integral> {
        self.quad(r, |x| self.eval(&[x]).abs().powf(p))
    }

    fn integral_signed(&self, r: &Rect) -> Result<Integral> {
        self.quad(r, |x| self.eval(&[x]))
    }

    fn integral_abs_dev_p(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
        self.quad(r, |x| (self.eval(&[x]) - shift).abs().powf(p))
    }

    fn value_bracket(&self, r: &Rect) -> Result<(f64, f64)> {
        let reach = (r.half_widths()[0] * self.g.scale).abs();
        let b = self.mass * self.g.factor.sup_abs(-reach, reach);
        Ok((-b, b))
    }

    fn axis_breaks(&self, _axis: usize, _fixed: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        self.kinks.iter().copied().filter(|k| *k > lo && *k < hi).collect()
    }

    fn nonnegative(&self) -> bool {
        self.g.factor.is_nonnegative()
    }
}

fn tensor_image(coef: f64, factors: Vec<Factor1D>, axes: &[Vec<Monomial>]) -> Result<TensorField> {
    let mut out: Vec<Box<dyn Field>> = Vec::with_capacity(factors.len());
    for (g, w) in factors.into_iter().zip(axes) {
        out.push(Box::new(ContinuousFactor::new(g, w.clone())?));
    }
    Ok(TensorField { coef, factors: out })
}

/// `ℍ_φ f` as a field, for `f` with a tensor expansion.
pub fn continuous_image(f: &FunctionSpec, w: &ContinuousWeight) -> Result<Image> {
    w.validate()?;
    let n = f.dim()?;
    if w.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.dim() });
    }
    let terms = f
        .tensor_terms()
        .ok_or_else(|| Error::NeedsOracle("the continuous image needs a tensor-product expansion of f".into()))?;
    let (scale, axes) = w.separable();
    let mut parts: Vec<TensorField> = Vec::with_capacity(terms.len());
    for (coef, factors) in terms {
        parts.push(tensor_image(coef * scale, factors, &axes)?);
    }
    let field: Box<dyn Field> =
        if parts.len() == 1 { Box::new(parts.pop().expect("one part")) } else { Box::new(TensorSum::new(parts)) };
    Ok(Image { field, uniform_error: 0.0, terms: 1 })
}
