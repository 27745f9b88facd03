use super::{FunctionSpec, Integral, Rect};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::quad::{integrate_box, Breaks, QuadTol};

/// Cap on the number of constant cells enumerated by the exact piecewise-constant path.
const MAX_CELLS: u64 = 4_000_000;

pub(crate) const RADIAL_TOL: QuadTol = QuadTol::new(1e-12, 1e-11);

fn check(f: &FunctionSpec, p: f64, r: &Rect) -> Result<usize> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("exponent p must satisfy 1 <= p < inf, got {p}")));
    }
    let n = f.dim()?;
    if r.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
    }
    Ok(n)
}

pub(super) fn abs_p(f: &FunctionSpec, p: f64, r: &Rect) -> Result<Integral> {
    check(f, p, r)?;
    exact_abs_p(f, p, r)
}

fn exact_abs_p(f: &FunctionSpec, p: f64, r: &Rect) -> Result<Integral> {
    let h = r.half_widths();
    match f {
        FunctionSpec::Constant { c, .. } => Ok(Integral::exact(c.abs().powf(p) * r.volume())),
        FunctionSpec::IndicatorHalfSpace { .. } => Ok(Integral::exact(0.5 * r.volume())),
        FunctionSpec::TensorPiecewise { factors } => {
            let mut acc = 1.0;
            for (g, rj) in factors.iter().zip(h) {
                acc *= g.abs_p_integral(-rj, *rj, p)?;
            }
            Ok(Integral::exact(acc))
        }
        FunctionSpec::RadialPowerTail { exponent, dim } => {
            let q = exponent * p;
            if *dim == 1 {
                let rr = h[0];
                if rr <= 1.0 {
                    return Ok(Integral::ZERO);
                }
                let one_side = if q == -1.0 { rr.ln() } else { (rr.powf(q + 1.0) - 1.0) / (q + 1.0) };
                Ok(Integral::exact(2.0 * one_side))
            } else {
                radial_numeric(q, h)
            }
        }
        FunctionSpec::StaircaseCross { p_root, max_band } => Ok(Integral::exact(staircase_abs_p(*p_root, *max_band, p, h))),
        FunctionSpec::AxisScaled { inner, scale } => {
            let jac: f64 = scale.iter().product();
            Ok(exact_abs_p(inner, p, &r.scaled(scale)?)?.scale(1.0 / jac))
        }
        FunctionSpec::LinearCombo { terms } => {
            if terms.len() == 1 {
                let t = &terms[0];
                return Ok(exact_abs_p(&t.function, p, r)?.scale(t.coef.abs().powf(p)));
            }
            match piecewise_cells(f, r)? {
                Some(cells) => Ok(Integral::exact(cell_sum(&cells, |v| v.abs().powf(p)))),
                None => Err(Error::NeedsOracle("linear combination with non-constant terms".into())),
            }
        }
    }
}

/// Band counting for the cross staircase: the rectangle meets the central square and, on
/// each of the four arms, a fraction of every band `(k-1, k]` it reaches.
fn staircase_abs_p(p_root: f64, max_band: Option<u32>, p: f64, h: &[f64]) -> f64 {
    let (r1, r2) = (h[0], h[1]);
    let a1 = r1.min(1.0);
    let a2 = r2.min(1.0);
    let weight = |k: f64| k.powf(p / p_root);
    let mut terms = vec![4.0 * a1 * a2];
    let reach = r1.max(r2).ceil() as u64;
    let last = max_band.map_or(reach, |m| reach.min(m as u64));
    for k in 2..=last {
        let kf = k as f64;
        let overlap = |rr: f64| (rr - (kf - 1.0)).clamp(0.0, 1.0);
        let area = 2.0 * a1 * 2.0 * overlap(r2) + 2.0 * a2 * 2.0 * overlap(r1);
        if area > 0.0 {
            terms.push(weight(kf) * area);
        }
    }
    pairwise_sum(&terms)
}

fn radial_numeric(q: f64, h: &[f64]) -> Result<Integral> {
    let n = h.len();
    let g = |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > 1.0 {
            r2.powf(0.5 * q)
        } else {
            0.0
        }
    };
    let breaks = |_axis: usize, fixed: &[f64], lo: f64, hi: f64| {
        let rest = 1.0 - fixed.iter().map(|v| v * v).sum::<f64>();
        let mut out = Vec::new();
        if rest > 0.0 {
            let s = rest.sqrt();
            if s > lo && s < hi {
                out.push(s);
            }
        }
        out
    };
    let lo = vec![0.0; n];
    let res = integrate_box(&g, &lo, h, &breaks, RADIAL_TOL)?;
    let sym = (1u32 << n) as f64;
    Ok(Integral { value: sym * res.value, error: sym * res.error.max(f64::EPSILON * res.value.abs()) })
}

/// Constant cells `(value, volume)` of `f` on `r`, when `f` is piecewise constant there.
pub fn piecewise_cells(f: &FunctionSpec, r: &Rect) -> Result<Option<Vec<(f64, f64)>>> {
    if !f.is_piecewise_constant() {
        return Ok(None);
    }
    let n = f.dim()?;
    if r.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
    }
    let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (axis, rj) in r.half_widths().iter().enumerate() {
        let Some(inner) = f.constant_breaks(axis, -rj, *rj) else {
            return Ok(None);
        };
        let mut axis_nodes = Vec::with_capacity(inner.len() + 2);
        axis_nodes.push(-rj);
        axis_nodes.extend(inner);
        axis_nodes.push(*rj);
        nodes.push(axis_nodes);
    }
    let total: u64 = nodes.iter().map(|v| (v.len() - 1) as u64).product();
    if total > MAX_CELLS {
        return Err(Error::BudgetExceeded { required: total, allowed: MAX_CELLS });
    }
    let mut cells = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; n];
    let mut mid = vec![0.0; n];
    loop {
        let mut vol = 1.0;
        for k in 0..n {
            let (a, b) = (nodes[k][idx[k]], nodes[k][idx[k] + 1]);
            mid[k] = 0.5 * (a + b);
            vol *= b - a;
        }
        cells.push((f.eval_unchecked(&mid), vol));
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(Some(cells));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] + 1 < nodes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub(crate) fn cell_sum(cells: &[(f64, f64)], g: impl Fn(f64) -> f64) -> f64 {
    let terms: Vec<f64> = cells.iter().map(|(v, vol)| g(*v) * vol).collect();
    pairwise_sum(&terms)
}

/// `∫_r f dx` (signed).
pub fn signed_integral(f: &FunctionSpec, r: &Rect) -> Result<Integral> {
    check(f, 1.0, r)?;
    signed(f, r)
}

fn signed(f: &FunctionSpec, r: &Rect) -> Result<Integral> {
    match f {
        FunctionSpec::Constant { c, .. } => Ok(Integral::exact(c * r.volume())),
        FunctionSpec::TensorPiecewise { factors } => {
            let mut acc = 1.0;
            for (g, rj) in factors.iter().zip(r.half_widths()) {
                acc *= g.signed_integral(-rj, *rj)?;
            }
            Ok(Integral::exact(acc))
        }
        FunctionSpec::RadialPowerTail { .. } | FunctionSpec::StaircaseCross { .. } | FunctionSpec::IndicatorHalfSpace { .. } => {
            exact_abs_p(f, 1.0, r)
        }
        FunctionSpec::AxisScaled { inner, scale } => {
            let jac: f64 = scale.iter().product();
            Ok(signed(inner, &r.scaled(scale)?)?.scale(1.0 / jac))
        }
        FunctionSpec::LinearCombo { terms } => {
            let mut acc = Integral::ZERO;
            for t in terms {
                acc = acc + signed(&t.function, r)?.scale(t.coef);
            }
            Ok(acc)
        }
    }
}

/// Iterated adaptive quadrature of `g` over `r` with breakpoints from `breaks`.
pub fn numeric_rect_integral(g: &dyn Fn(&[f64]) -> f64, breaks: &Breaks<'_>, r: &Rect, tol: QuadTol) -> Result<Integral> {
    let hi = r.half_widths().to_vec();
    let lo: Vec<f64> = hi.iter().map(|v| -v).collect();
    let res = integrate_box(g, &lo, &hi, breaks, tol)?;
    Ok(Integral { value: res.value, error: res.error.max(f64::EPSILON * res.value.abs()) })
}
