//! The integration surface the norms are computed against.
//!
//! Norms only need rectangle integrals of `|f|^p`, of `f`, and of `|f - a|^p`, plus a
//! bracket for the values of `f`. Closed-form test functions and operator images (which
//! are only known through quadrature) both implement [`Field`].

use crate::error::{Error, Result};
use crate::funcs::{self, FunctionSpec, Integral, Rect};
use crate::operators::{planar_abs_dev_p, TensorField};
use crate::quad::QuadTol;

/// Quadrature budget used when a function has no closed-form integral on a rectangle.
pub const FALLBACK_TOL: QuadTol = QuadTol::new(1e-12, 1e-11);

pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    fn integral_abs_p(&self, r: &Rect, p: f64) -> Result<Integral>;

    fn integral_signed(&self, r: &Rect) -> Result<Integral>;

    /// `∫_r |f - shift|^p dx`.
    fn integral_abs_dev_p(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral>;

    /// An interval containing the essential range of `f` on `r`.
    fn value_bracket(&self, r: &Rect) -> Result<(f64, f64)>;

    /// Constant cells `(value, volume)` covering `r`, for piecewise-constant fields.
    fn cells(&self, _r: &Rect) -> Result<Option<Vec<(f64, f64)>>> {
        Ok(None)
    }

    /// Points in `(lo, hi)` along `axis`, given the preceding coordinates, where `f` may fail
    /// to be smooth.
    fn axis_breaks(&self, _axis: usize, _fixed: &[f64], _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }

    /// True when `f ≥ 0` everywhere is known; `false` is inconclusive.
    fn nonnegative(&self) -> bool {
        false
    }
}

/// Samples per break-free segment when looking for sign changes of `f - shift`.
const KINK_SAMPLES: usize = 16;

/// `∫_r |f(x) - shift|^p dx` by iterated adaptive quadrature, split at the field's breakpoints
/// and, along the innermost axis, at the sampled crossings of the level `shift`.
pub fn numeric_abs_dev_p<F: Field + ?Sized>(f: &F, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
    let n = f.dim();
    let integrand = |x: &[f64]| (f.eval(x) - shift).abs().powf(p);
    let breaks = |axis: usize, fixed: &[f64], lo: f64, hi: f64| {
        let mut b = f.axis_breaks(axis, fixed, lo, hi);
        if axis + 1 == n {
            let mut x = fixed.to_vec();
            x.push(0.0);
            let mut h = |t: f64| {
                x[n - 1] = t;
                f.eval(&x) - shift
            };
            let mut edges = vec![lo];
            edges.extend(b.iter().copied());
            edges.push(hi);
            for e in edges.windows(2) {
                level_crossings(&mut h, e[0], e[1], &mut b);
            }
            b.sort_by(f64::total_cmp);
            b.dedup();
        }
        b
    };
    funcs::numeric_rect_integral(&integrand, &breaks, r, FALLBACK_TOL)
}

/// Bisected sign changes of `h` on a uniform sample of the open interval `(a, b)`.
fn level_crossings(h: &mut impl FnMut(f64) -> f64, a: f64, b: f64, out: &mut Vec<f64>) {
    let step = (b - a) / KINK_SAMPLES as f64;
    let at = |i: usize| a + step * (i as f64 + 0.5);
    let mut prev = (at(0), h(at(0)));
    for i in 1..KINK_SAMPLES {
        let t = at(i);
        let v = h(t);
        if (prev.1 < 0.0) != (v < 0.0) && prev.1 != 0.0 && v != 0.0 {
            let (mut lo, mut hi, neg_lo) = (prev.0, t, prev.1 < 0.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (h(mid) < 0.0) == neg_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = (t, v);
    }
}

impl Field for FunctionSpec {
    fn dim(&self) -> usize {
        FunctionSpec::dim(self).unwrap_or(0)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }

    fn integral_abs_p(&self, r: &Rect, p: f64) -> Result<Integral> {
        match funcs::rect_integral_abs_p(self, p, r) {
            Err(Error::NeedsOracle(_)) => self.numeric(r, 0.0, p),
            other => other,
        }
    }

    fn integral_signed(&self, r: &Rect) -> Result<Integral> {
        funcs::signed_integral(self, r)
    }

    fn integral_abs_dev_p(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
        if shift == 0.0 {
            return self.integral_abs_p(r, p);
        }
        if let Some(cells) = funcs::piecewise_cells(self, r)? {
            return Ok(Integral::exact(crate::funcs::cell_sum(&cells, |v| (v - shift).abs().powf(p))));
        }
        self.numeric(r, shift, p)
    }

    fn value_bracket(&self, r: &Rect) -> Result<(f64, f64)> {
        if let Some(cells) = funcs::piecewise_cells(self, r)? {
            let lo = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            let hi = cells.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
            return Ok((lo, hi));
        }
        let m = self
            .sup_abs_on_box(r.half_widths())
            .ok_or_else(|| Error::NeedsOracle("no finite bound for |f| on the rectangle".into()))?;
        Ok((-m, m))
    }

    fn cells(&self, r: &Rect) -> Result<Option<Vec<(f64, f64)>>> {
        funcs::piecewise_cells(self, r)
    }

    fn axis_breaks(&self, axis: usize, fixed: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        FunctionSpec::axis_breaks(self, axis, fixed, lo, hi)
    }

    fn nonnegative(&self) -> bool {
        self.is_nonnegative()
    }
}

impl FunctionSpec {
    fn numeric(&self, r: &Rect, shift: f64, p: f64) -> Result<Integral> {
        if r.dim() == 2 {
            if let Some(terms) = self.tensor_terms() {
                let parts: Vec<TensorField> = terms
                    .into_iter()
                    .map(|(coef, factors)| TensorField {
                        coef,
                        factors: factors
                            .into_iter()
                            .map(|g| Box::new(FunctionSpec::tensor(vec![g.factor]).scaled(vec![g.scale])) as Box<dyn Field>)
                            .collect(),
                    })
                    .collect();
                return planar_abs_dev_p(&parts.iter().collect::<Vec<_>>(), r, shift, p);
            }
        }
        numeric_abs_dev_p(self, r, shift, p)
    }
}
