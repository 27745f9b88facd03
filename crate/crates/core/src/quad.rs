//! Globally adaptive Gauss–Kronrod (7/15) quadrature in one dimension, and an iterated
//! version over axis-aligned boxes with caller-supplied breakpoints.

use std::cell::{Cell, RefCell};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// The 15-point Kronrod nodes on `[-1, 1]` in increasing order, with Kronrod weights and the
/// embedded 7-point Gauss weights (zero off the Gauss nodes).
pub fn gk15_rule() -> ([f64; 15], [f64; 15], [f64; 15]) {
    let (mut x, mut wk, mut wg) = ([0.0; 15], [0.0; 15], [0.0; 15]);
    for j in 0..8 {
        let (lo, hi) = (j, 14 - j);
        x[lo] = -XGK[j];
        x[hi] = XGK[j];
        wk[lo] = WGK[j];
        wk[hi] = WGK[j];
        if j % 2 == 1 {
            wg[lo] = WG[j / 2];
            wg[hi] = WG[j / 2];
        }
    }
    (x, wk, wg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl QuadTol {
    pub const fn new(abs: f64, rel: f64) -> Self {
        QuadTol { abs, rel, max_intervals: 4000 }
    }

    fn split(self, outer_width: f64, dims: usize) -> (QuadTol, QuadTol) {
        let share = 1.0 / dims as f64;
        let outer = QuadTol { abs: self.abs * share, rel: self.rel * share, ..self };
        let inner_abs = self.abs * (1.0 - share) / outer_width.max(f64::MIN_POSITIVE);
        let inner = QuadTol { abs: inner_abs, rel: self.rel * (1.0 - share), ..self };
        (outer, inner)
    }
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol::new(1e-12, 1e-11)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, starting from the panels cut at `breaks`, bisecting the
/// panel with the largest error estimate until the total estimate meets `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: QuadTol) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("quadrature bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult::default());
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| *x > lo && *x < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(lo);
    nodes.extend(cuts);
    nodes.push(hi);

    let mut segments: Vec<Segment> = nodes.windows(2).map(|w| kronrod(&mut f, w[0], w[1])).collect();
    let mut evals = 15 * segments.len();
    let min_width = (hi - lo) * 1e-14;
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(QuadResult { value: sign * value, error, evals });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.b - s.a > min_width)
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .unwrap_or((usize::MAX, &segments[0]));
        if worst == usize::MAX || segments.len() >= tol.max_intervals {
            return Err(Error::NonConvergent { achieved: error, requested: target });
        }
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod(&mut f, s.a, mid));
        segments.push(kronrod(&mut f, mid, s.b));
        evals += 30;
    }
}

/// Breakpoint oracle for iterated integration: given the axis being integrated, the
/// coordinates already fixed on earlier axes, and the current range, returns the points at
/// which the integrand may fail to be smooth along that axis.
pub type Breaks<'a> = dyn Fn(usize, &[f64], f64, f64) -> Vec<f64> + 'a;

/// Iterated adaptive integration of `g` over the box `[lo, hi]`. The absolute budget is split
/// evenly across the axes; the reported error adds the outer estimate to the width-scaled
/// worst inner estimate.
pub fn integrate_box(g: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], breaks: &Breaks<'_>, tol: QuadTol) -> Result<QuadResult> {
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(Error::invalid("box bounds must have equal nonzero length"));
    }
    let mut prefix = Vec::with_capacity(lo.len());
    nested(g, lo, hi, breaks, tol, &mut prefix)
}

fn nested(g: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], breaks: &Breaks<'_>, tol: QuadTol, prefix: &mut Vec<f64>) -> Result<QuadResult> {
    let axis = prefix.len();
    let cuts = breaks(axis, prefix, lo[axis], hi[axis]);
    if axis + 1 == lo.len() {
        let buf = RefCell::new(prefix.clone());
        buf.borrow_mut().push(0.0);
        return integrate(
            |x| {
                let mut b = buf.borrow_mut();
                b[axis] = x;
                g(&b)
            },
            lo[axis],
            hi[axis],
            &cuts,
            tol,
        );
    }
    let width = (hi[axis] - lo[axis]).abs();
    let (outer_tol, inner_tol) = tol.split(width, lo.len() - axis);
    let worst_inner = Cell::new(0.0f64);
    let inner_evals = Cell::new(0usize);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let scratch = RefCell::new(prefix.clone());
    let outer = integrate(
        |x| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let mut p = scratch.borrow_mut();
            p.push(x);
            let r = nested(g, lo, hi, breaks, inner_tol, &mut p);
            p.pop();
            match r {
                Ok(r) => {
                    worst_inner.set(worst_inner.get().max(r.error));
                    inner_evals.set(inner_evals.get() + r.evals);
                    r.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        lo[axis],
        hi[axis],
        &cuts,
        outer_tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    Ok(QuadResult {
        value: outer.value,
        error: outer.error + width * worst_inner.get(),
        evals: inner_evals.get(),
    })
}
