use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::field::{numeric_abs_dev_p, Field, FALLBACK_TOL};
use crate::funcs::{Integral, Rect};
use crate::quad::integrate;

use super::planar::planar_abs_dev_p;

const MAX_PRODUCT_CELLS: usize = 4_000_000;

/// `coef · Π_i g_i(x_i)` for one-dimensional fields `g_i`. Rectangle integrals of `|·|^p`
/// and of the function itself factor into one-dimensional integrals.
pub struct TensorField {
    pub coef: f64,
    pub factors: Vec<Box<dyn Field>>,
}

fn interval(h: f64) -> Result<Rect> {
    Rect::new(vec![h])
}

/// Error of a product whose factors carry absolute errors.
fn product_error(parts: &[Integral]) -> f64 {
    let exact: f64 = parts.iter().map(|p| p.value.abs()).product();
    let hi: f64 = parts.iter().map(|p| p.value.abs() + p.error).product();
    hi - exact
}

impl Field for TensorField {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.coef;
        for (g, xi) in self.factors.iter().zip(x) {
            acc *= g.eval(&[*xi]);
        }
        acc
    }

    fn integral_abs_p(&self, r: &Rect, p: f64) -> Result<Integral> {
        let mut parts = Vec::with_capacity(self.factors.len());
        for (g, h) in self.factors.iter().zip(r.half_widths()) {
            parts.push(g.integral_abs_p(&interval(*h)?, p)?);
        }
        let c = self.coef.abs().powf(p);
        Ok(Integral { value: c * parts.iter().map(|v| v.value).product::<f64>(), error: c * product_error(&parts) })
    }

    fn integral_signed(&self, r: &Rect) -> Result<Integral> {
        let mut parts = Vec::with_capacity(self.factors.len());
        for (g, h) in self.factors.iter().zip(r.half_widths()) {
            parts.push(g.integral_signed(&interval(*h)?)?);
        }
        let c = self.coef;
        Ok(Integral { value: c * parts.iter().map(|v| v.value).product::<f64>(), error: c.abs() * product_error(&parts) })
    }

    fn integral_abs_dev_p(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
        if shift == 0.0 {
            return self.integral_abs_p(r, p);
        }
        if p == 2.0 {
            return square_deviation(self.integral_abs_p(r, 2.0)?, self.integral_signed(r)?, shift, r.volume());
        }
        if let Some(cells) = self.cells(r)? {
            return Ok(Integral::exact(crate::funcs::cell_sum(&cells, |v| (v - shift).abs().powf(p))));
        }
        if self.dim() == 2 {
            return planar_abs_dev_p(&[self], r, shift, p);
        }
        numeric_abs_dev_p(self, r, shift, p)
    }

    fn value_bracket(&self, r: &Rect) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (self.coef, self.coef);
        for (g, h) in self.factors.iter().zip(r.half_widths()) {
            let (a, b) = g.value_bracket(&interval(*h)?)?;
            let c = [lo * a, lo * b, hi * a, hi * b];
            lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        Ok((lo, hi))
    }

    fn cells(&self, r: &Rect) -> Result<Option<Vec<(f64, f64)>>> {
        let mut out = vec![(self.coef, 1.0)];
        for (g, h) in self.factors.iter().zip(r.half_widths()) {
            let Some(axis) = g.cells(&interval(*h)?)? else {
                return Ok(None);
            };
            if out.len() * axis.len() > MAX_PRODUCT_CELLS {
                return Ok(None);
            }
            out = out.iter().flat_map(|(v, w)| axis.iter().map(move |(a, b)| (v * a, w * b))).collect();
        }
        Ok(Some(out))
    }

    fn axis_breaks(&self, axis: usize, _fixed: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        self.factors[axis].axis_breaks(0, &[], lo, hi)
    }

    fn nonnegative(&self) -> bool {
        self.coef >= 0.0 && self.factors.iter().all(|g| g.nonnegative())
    }
}

/// `∫ (f - a)^2 = ∫ f^2 - 2a ∫ f + a^2 |r|`.
fn square_deviation(sq: Integral, signed: Integral, a: f64, vol: f64) -> Result<Integral> {
    let value = sq.value - 2.0 * a * signed.value + a * a * vol;
    let rounding = 4.0 * f64::EPSILON * (sq.value.abs() + 2.0 * (a * signed.value).abs() + a * a * vol);
    Ok(Integral { value: value.max(0.0), error: sq.error + 2.0 * a.abs() * signed.error + rounding })
}

type GramKey = (usize, u64);

/// A finite sum of [`TensorField`]s. Signed integrals add; `∫ |·|^2` expands into products of
/// one-dimensional pair integrals (cached per axis and half-width); `∫ |·|` adds when every
/// part is nonnegative.
pub struct TensorSum {
    pub parts: Vec<TensorField>,
    gram: Mutex<HashMap<GramKey, Arc<Vec<Integral>>>>,
}

impl TensorSum {
    pub fn new(parts: Vec<TensorField>) -> Self {
        TensorSum { parts, gram: Mutex::new(HashMap::new()) }
    }

    fn gram_axis(&self, axis: usize, half: f64) -> Result<Arc<Vec<Integral>>> {
        let key = (axis, half.to_bits());
        if let Some(g) = self.gram.lock().expect("gram cache").get(&key) {
            return Ok(g.clone());
        }
        let m = self.parts.len();
        let mut out = vec![Integral::ZERO; m * m];
        for c in 0..m {
            for d in c..m {
                let (a, b) = (&self.parts[c].factors[axis], &self.parts[d].factors[axis]);
                let mut breaks = a.axis_breaks(0, &[], -half, half);
                breaks.extend(b.axis_breaks(0, &[], -half, half));
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let res = integrate(|x| a.eval(&[x]) * b.eval(&[x]), -half, half, &breaks, FALLBACK_TOL)?;
                let v = Integral { value: res.value, error: res.error.max(f64::EPSILON * res.value.abs()) };
                out[c * m + d] = v;
                out[d * m + c] = v;
            }
        }
        let out = Arc::new(out);
        self.gram.lock().expect("gram cache").insert(key, out.clone());
        Ok(out)
    }

    fn square_integral(&self, r: &Rect) -> Result<Integral> {
        let m = self.parts.len();
        let axes: Vec<Arc<Vec<Integral>>> =
            r.half_widths().iter().enumerate().map(|(i, h)| self.gram_axis(i, *h)).collect::<Result<_>>()?;
        let mut terms = Vec::with_capacity(m * m);
        let mut error = 0.0;
        for c in 0..m {
            for d in 0..m {
                let parts: Vec<Integral> = axes.iter().map(|g| g[c * m + d]).collect();
                let k = self.parts[c].coef * self.parts[d].coef;
                terms.push(k * parts.iter().map(|v| v.value).product::<f64>());
                error += k.abs() * product_error(&parts);
            }
        }
        let value = crate::numeric::stable_sum(terms);
        Ok(Integral { value: value.max(0.0), error: error + 4.0 * f64::EPSILON * value.abs() })
    }

    fn piecewise_constant(&self, r: &Rect) -> Result<bool> {
        for part in &self.parts {
            for (g, h) in part.factors.iter().zip(r.half_widths()) {
                if g.cells(&interval(*h)?)?.is_none() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

impl Field for TensorSum {
    fn dim(&self) -> usize {
        self.parts.first().map_or(0, |p| p.dim())
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.eval(x)).sum()
    }

    fn integral_abs_p(&self, r: &Rect, p: f64) -> Result<Integral> {
        if p == 1.0 && self.parts.iter().all(|t| t.nonnegative()) {
            let mut total = Integral::ZERO;
            for part in &self.parts {
                total = total + part.integral_abs_p(r, 1.0)?;
            }
            return Ok(total);
        }
        if p == 2.0 {
            return self.square_integral(r);
        }
        if let Some(cells) = self.cells(r)? {
            return Ok(Integral::exact(crate::funcs::cell_sum(&cells, |v| v.abs().powf(p))));
        }
        if self.dim() == 2 {
            return planar_abs_dev_p(&self.parts.iter().collect::<Vec<_>>(), r, 0.0, p);
        }
        numeric_abs_dev_p(self, r, 0.0, p)
    }

    fn integral_signed(&self, r: &Rect) -> Result<Integral> {
        let mut total = Integral::ZERO;
        for part in &self.parts {
            total = total + part.integral_signed(r)?;
        }
        Ok(total)
    }

    fn integral_abs_dev_p(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
        if shift == 0.0 {
            return self.integral_abs_p(r, p);
        }
        if p == 2.0 {
            return square_deviation(self.square_integral(r)?, self.integral_signed(r)?, shift, r.volume());
        }
        if let Some(cells) = self.cells(r)? {
            return Ok(Integral::exact(crate::funcs::cell_sum(&cells, |v| (v - shift).abs().powf(p))));
        }
        if self.dim() == 2 {
            return planar_abs_dev_p(&self.parts.iter().collect::<Vec<_>>(), r, shift, p);
        }
        numeric_abs_dev_p(self, r, shift, p)
    }

    fn value_bracket(&self, r: &Rect) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (0.0, 0.0);
        for part in &self.parts {
            let (a, b) = part.value_bracket(r)?;
            lo += a;
            hi += b;
        }
        Ok((lo, hi))
    }

    fn cells(&self, r: &Rect) -> Result<Option<Vec<(f64, f64)>>> {
        if !self.piecewise_constant(r)? {
            return Ok(None);
        }
        let edges: Vec<Vec<f64>> = r
            .half_widths()
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let mut e = vec![-h];
                e.extend(self.axis_breaks(i, &[], -h, *h));
                e.push(*h);
                e
            })
            .collect();
        let count: usize = edges.iter().map(|e| e.len() - 1).product();
        if count > MAX_PRODUCT_CELLS {
            return Ok(None);
        }
        let n = edges.len();
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        loop {
            let mut vol = 1.0;
            for i in 0..n {
                let (a, b) = (edges[i][idx[i]], edges[i][idx[i] + 1]);
                x[i] = 0.5 * (a + b);
                vol *= b - a;
            }
            out.push((self.eval(&x), vol));
            let mut a = n;
            loop {
                if a == 0 {
                    return Ok(Some(out));
                }
                a -= 1;
                if idx[a] + 2 < edges[a].len() {
                    idx[a] += 1;
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    fn axis_breaks(&self, axis: usize, fixed: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.parts.iter().flat_map(|p| p.axis_breaks(axis, fixed, lo, hi)).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn nonnegative(&self) -> bool {
        self.parts.iter().all(|p| p.nonnegative())
    }
}

/// An operator image: a field together with a uniform bound on its distance from the exact image.
pub struct Image {
    pub field: Box<dyn Field>,
    /// `sup_x |T f(x) - field(x)|`, from truncating the operator.
    pub uniform_error: f64,
    /// Terms retained by the truncation (1 for continuous operators).
    pub terms: usize,
}

impl Field for Image {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.field.eval(x)
    }
    fn integral_abs_p(&self, r: &Rect, p: f64) -> Result<Integral> {
        self.field.integral_abs_p(r, p)
    }
    fn integral_signed(&self, r: &Rect) -> Result<Integral> {
        self.field.integral_signed(r)
    }
    fn integral_abs_dev_p(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
        self.field.integral_abs_dev_p(r, shift, p)
    }
    fn value_bracket(&self, r: &Rect) -> Result<(f64, f64)> {
        self.field.value_bracket(r)
    }
    fn cells(&self, r: &Rect) -> Result<Option<Vec<(f64, f64)>>> {
        self.field.cells(r)
    }
    fn axis_breaks(&self, axis: usize, fixed: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        self.field.axis_breaks(axis, fixed, lo, hi)
    }
    fn nonnegative(&self) -> bool {
        self.field.nonnegative()
    }
}
