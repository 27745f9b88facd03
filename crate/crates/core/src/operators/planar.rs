//! `∫ |f - a|^p` over rectangles for planar sums of products `Σ c_i g_i(x) h_i(y)`.
//!
//! The `x` factors are tabulated once per rectangle on Gauss–Kronrod panels fine enough to
//! resolve each of them, so an inner integral costs one dot product per node. On panels where
//! `f - a` changes sign, the polynomial through the tabulated values stands in for it; the
//! crossing is bisected on that polynomial and each side integrated separately.

use std::cell::{Cell, RefCell};

use crate::error::{Error, Result};
use crate::funcs::{Integral, Rect};
use crate::quad::{gk15_rule, integrate, QuadTol};

use super::image::TensorField;

const PANEL_REL: f64 = 1e-13;
const MAX_PANELS: usize = 4096;
const MAX_DEPTH: u32 = 40;
const ENDPOINT_INSET: f64 = 1e-13;
/// Outer tolerance; the inner integrals carry relative noise near `PANEL_REL`.
const OUTER_TOL: QuadTol = QuadTol::new(1e-13, 1e-10);

struct Panel {
    a: f64,
    b: f64,
    /// `g_i` at the 15 nodes, part-major.
    values: Vec<f64>,
    /// `g_i` at `a` and `b`.
    ends: Vec<[f64; 2]>,
    /// Kronrod–Gauss difference of each `∫ g_i` on the panel.
    resolution: Vec<f64>,
}

struct Table {
    panels: Vec<Panel>,
    nodes: [f64; 15],
    wk: [f64; 15],
    wg: [f64; 15],
    /// The nodes with the panel ends added, and their barycentric weights.
    points: [f64; 17],
    bary: [f64; 17],
}

fn barycentric(points: &[f64; 17]) -> [f64; 17] {
    let mut w = [1.0; 17];
    for j in 0..17 {
        for k in 0..17 {
            if k != j {
                w[j] /= points[j] - points[k];
            }
        }
    }
    w
}

fn tabulate(parts: &[&TensorField], half: f64) -> Result<Table> {
    let (nodes, wk, wg) = gk15_rule();
    let mut cuts = vec![-half];
    for part in parts {
        cuts.extend(part.factors[0].axis_breaks(0, &[], -half, half));
    }
    cuts.push(half);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let make = |a: f64, b: f64| {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        // Factors may jump at panel ends; take the values from inside the panel.
        let inset = (b - a) * ENDPOINT_INSET;
        let mut values = Vec::with_capacity(15 * parts.len());
        let mut ends = Vec::with_capacity(parts.len());
        for part in parts {
            let g = &part.factors[0];
            values.extend(nodes.iter().map(|t| g.eval(&[c + h * t])));
            ends.push([g.eval(&[a + inset]), g.eval(&[b - inset])]);
        }
        let mut resolution = Vec::with_capacity(parts.len());
        let mut scales = Vec::with_capacity(parts.len());
        for i in 0..parts.len() {
            let v = &values[15 * i..15 * (i + 1)];
            let k: f64 = v.iter().zip(&wk).map(|(f, w)| f * w).sum();
            let g: f64 = v.iter().zip(&wg).map(|(f, w)| f * w).sum();
            resolution.push(h * (k - g).abs());
            scales.push(h * v.iter().zip(&wk).map(|(f, w)| f.abs() * w).sum::<f64>());
        }
        let ok = resolution.iter().zip(&scales).all(|(r, s)| *r <= PANEL_REL * s + f64::MIN_POSITIVE);
        (Panel { a, b, values, ends, resolution }, ok)
    };
    let mut panels = Vec::new();
    let mut stack: Vec<(f64, f64, u32)> = cuts.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    while let Some((a, b, depth)) = stack.pop() {
        let (panel, ok) = make(a, b);
        if depth >= MAX_DEPTH || panels.len() + stack.len() >= MAX_PANELS || ok {
            panels.push(panel);
        } else {
            let m = 0.5 * (a + b);
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
        }
    }
    let mut points = [0.0; 17];
    points[0] = -1.0;
    points[1..16].copy_from_slice(&nodes);
    points[16] = 1.0;
    Ok(Table { panels, nodes, wk, wg, points, bary: barycentric(&points) })
}

/// `∫_r |Σ_i c_i g_i(x) h_i(y) - shift|^p` for two-dimensional tensor parts.
pub(crate) fn planar_abs_dev_p(parts: &[&TensorField], r: &Rect, shift: f64, p: f64) -> Result<Integral> {
    let hw = r.half_widths();
    let table = tabulate(parts, hw[0])?;
    let m = parts.len();
    let mut ycuts = Vec::new();
    for part in parts {
        ycuts.extend(part.factors[1].axis_breaks(0, &[], -hw[1], hw[1]));
    }
    ycuts.sort_by(f64::total_cmp);
    ycuts.dedup();
    let worst = Cell::new(0.0f64);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let beta = RefCell::new(vec![0.0; m]);
    let outer = integrate(
        |y| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let mut b = beta.borrow_mut();
            for (bi, part) in b.iter_mut().zip(parts) {
                *bi = part.coef * part.factors[1].eval(&[y]);
            }
            match inner(&table, &b, shift, p) {
                Ok(v) => {
                    worst.set(worst.get().max(v.error));
                    v.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        -hw[1],
        hw[1],
        &ycuts,
        OUTER_TOL,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let error = outer.error + 2.0 * hw[1] * worst.get();
    Ok(Integral { value: outer.value, error: error.max(f64::EPSILON * outer.value.abs()) })
}

fn inner(t: &Table, beta: &[f64], shift: f64, p: f64) -> Result<Integral> {
    let m = beta.len();
    let pow = |v: f64| if p == 1.0 { v.abs() } else { v.abs().powf(p) };
    let (mut value, mut error) = (0.0, 0.0);
    // Values at the reference points -1, nodes, 1.
    let mut h = [0.0; 17];
    for panel in &t.panels {
        for k in 0..15 {
            h[k + 1] = (0..m).map(|i| beta[i] * panel.values[15 * i + k]).sum::<f64>() - shift;
        }
        h[0] = (0..m).map(|i| beta[i] * panel.ends[i][0]).sum::<f64>() - shift;
        h[16] = (0..m).map(|i| beta[i] * panel.ends[i][1]).sum::<f64>() - shift;
        let half = 0.5 * (panel.b - panel.a);
        let crossings: Vec<(f64, f64)> = (0..16)
            .filter(|&j| (h[j] < 0.0 && h[j + 1] > 0.0) || (h[j] > 0.0 && h[j + 1] < 0.0))
            .map(|j| (t.points[j], t.points[j + 1]))
            .collect();
        if crossings.is_empty() {
            let k: f64 = h[1..16].iter().zip(&t.wk).map(|(v, w)| pow(*v) * w).sum();
            let g: f64 = h[1..16].iter().zip(&t.wg).map(|(v, w)| pow(*v) * w).sum();
            value += half * k;
            error += half * (k - g).abs();
            continue;
        }
        let interp = |s: f64| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..17 {
                let d = s - t.points[j];
                if d == 0.0 {
                    return h[j];
                }
                let q = t.bary[j] / d;
                num += q * h[j];
                den += q;
            }
            num / den
        };
        let mut edges = vec![-1.0];
        edges.extend(crossings.into_iter().map(|(lo, hi)| bisect(&interp, lo, hi)));
        edges.push(1.0);
        for e in edges.windows(2) {
            let (c, w) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
            let mut k = 0.0;
            let mut g = 0.0;
            for j in 0..15 {
                let v = pow(interp(c + w * t.nodes[j]));
                k += t.wk[j] * v;
                g += t.wg[j] * v;
            }
            value += half * w * k;
            error += half * w * (k - g).abs();
        }
        // The interpolant inherits the tabulation error of each factor.
        let spread: f64 = (0..m).map(|i| beta[i].abs() * panel.resolution[i]).sum();
        error += 4.0 * p * spread * h.iter().map(|v| v.abs()).fold(0.0, f64::max).powf(p - 1.0);
    }
    Ok(Integral { value, error })
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = f(lo) < 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
