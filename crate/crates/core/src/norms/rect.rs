use crate::error::Result;
use crate::field::Field;
use crate::funcs::{Integral, Rect};
use crate::numeric::dyadic_log_grid;
use crate::oracle::{grid_sup_search, SupResult};
use crate::tolerances::CMO_TERNARY;

use super::{root_error, Attained, Convention, NormEstimate, NormParams, Variant};

const MONOTONE_SLACK: f64 = 1e-12;

/// `[(1/N) ∫_r |f|^p]^(1/p)` with `N` the convention's normalizer.
pub fn rect_avg_p(f: &dyn Field, p: f64, r: &Rect, convention: Convention) -> Result<Integral> {
    let i = f.integral_abs_p(r, p)?;
    let norm = convention.normalizer(r);
    let avg = i.value.max(0.0) / norm;
    Ok(Integral { value: avg.powf(1.0 / p), error: root_error(avg, i.error / norm, p) })
}

/// Per-axis half-width candidates.
pub fn rect_candidates(n: usize, params: &NormParams) -> Vec<Vec<f64>> {
    let axis = dyadic_log_grid(params.variant.lowest_exponent(), params.j_max as i32, params.per_octave);
    vec![axis; n]
}

fn growth_note(sup: &SupResult, steps_per_octave: usize) -> String {
    let mut parts = Vec::new();
    for axis in 0..sup.shape.len() {
        let m = sup.slice_maxima(axis);
        if m.len() > steps_per_octave {
            let last = m[m.len() - 1];
            let prev = m[m.len() - 1 - steps_per_octave];
            if last > prev * (1.0 + MONOTONE_SLACK) {
                let factor = if prev > 0.0 { last / prev } else { f64::INFINITY };
                parts.push(format!("axis {axis} slice maximum grew by a factor {factor:.4} over the last octave"));
            }
        }
    }
    if parts.is_empty() {
        "objective nonincreasing over the last two octaves".into()
    } else {
        format!("not converged: {}", parts.join("; "))
    }
}

fn rect_search<F>(f: &dyn Field, params: &NormParams, objective: F) -> Result<NormEstimate>
where
    F: Fn(&Rect) -> Result<Integral> + Sync,
{
    params.validate()?;
    let axes = rect_candidates(f.dim(), params);
    let sup = grid_sup_search(
        |x| {
            let v = objective(&Rect::new(x.to_vec())?)?;
            Ok((v.value, v.error))
        },
        &axes,
        params.budget,
    )?;
    let per = params.per_octave as usize;
    let converged = sup.eventually_nonincreasing(2 * per, MONOTONE_SLACK);
    Ok(NormEstimate {
        value: sup.value,
        attained: Attained::Rect(sup.argmax.clone()),
        converged,
        error_bound: sup.error,
        note: growth_note(&sup, per),
    })
}

/// Supremum of [`rect_avg_p`] over the log-spaced rectangle candidates.
pub fn bp_rect_norm(f: &dyn Field, params: &NormParams) -> Result<NormEstimate> {
    rect_search(f, params, |r| rect_avg_p(f, params.p, r, params.convention))
}

/// `∫` of `|f|^p` over the product shell `C_{j_1} × … × C_{j_n}`, by inclusion–exclusion over
/// the rectangles `Π [-2^{j_i}, 2^{j_i}]` and the inner rectangles they drop.
pub fn dyadic_shell_integral(f: &dyn Field, p: f64, index: &[i32], variant: Variant) -> Result<Integral> {
    let n = index.len();
    // In the inhomogeneous case the zero shell is the whole interval [-1, 1].
    let has_hole: Vec<bool> = index.iter().map(|j| !(matches!(variant, Variant::Inhomogeneous) && *j == 0)).collect();
    let mut total = Integral::ZERO;
    for mask in 0u32..(1 << n) {
        if (0..n).any(|i| mask & (1 << i) != 0 && !has_hole[i]) {
            continue;
        }
        let half: Vec<f64> = (0..n)
            .map(|i| {
                let j = if mask & (1 << i) != 0 { index[i] - 1 } else { index[i] };
                2f64.powi(j)
            })
            .collect();
        let part = f.integral_abs_p(&Rect::new(half)?, p)?;
        if mask.count_ones() % 2 == 0 {
            total = total + part;
        } else {
            total = total - part;
        }
    }
    total.value = total.value.max(0.0);
    Ok(total)
}

/// `sup_j 2^{-Σj/p} ‖f χ_{C_j}‖_p` over shell indices up to `j_max` on every axis.
pub fn bp_dyadic_norm(f: &dyn Field, params: &NormParams) -> Result<NormEstimate> {
    params.validate()?;
    let n = f.dim();
    let lo = params.variant.lowest_exponent();
    let axis: Vec<f64> = (lo..=params.j_max as i32).map(|j| j as f64).collect();
    let axes = vec![axis; n];
    let p = params.p;
    let sup = grid_sup_search(
        |x| {
            let idx: Vec<i32> = x.iter().map(|v| *v as i32).collect();
            let shell = dyadic_shell_integral(f, p, &idx, params.variant)?;
            let w = 2f64.powi(-idx.iter().sum::<i32>());
            let v = w * shell.value;
            Ok((v.powf(1.0 / p), root_error(v, w * shell.error, p)))
        },
        &axes,
        params.budget,
    )?;
    let converged = sup.eventually_nonincreasing(2, MONOTONE_SLACK);
    Ok(NormEstimate {
        value: sup.value,
        attained: Attained::Dyadic(sup.argmax.iter().map(|v| *v as i32).collect()),
        converged,
        error_bound: sup.error,
        note: growth_note(&sup, 1),
    })
}

/// Upper constant in `rect ≤ C · dyadic` (literal normalizer), from covering a rectangle with
/// `2^{j-1} < R_i ≤ 2^{j_i}` by the shells `k_i ≤ j_i`: the ratio
/// `Π (2^{j_i+1} - 1) / Π max(2^{j_i-1}, 1)` maximized over `0 ≤ j_i ≤ j_max`, to the power `1/p`.
pub fn sandwich_chain_constant(n: usize, p: f64, j_max: u32) -> f64 {
    let per_axis = (0..=j_max as i32)
        .map(|j| (2f64.powi(j + 1) - 1.0) / 2f64.powi(j - 1).max(1.0))
        .fold(0.0, f64::max);
    per_axis.powi(n as i32).powf(1.0 / p)
}

/// Mean oscillation of `f` on one rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Oscillation {
    /// `f_R`, the volume average of `f`.
    pub mean: f64,
    /// `[(1/N) ∫ |f - f_R|^p]^(1/p)`.
    pub plain: Integral,
    /// `inf_a [(1/N) ∫ |f - a|^p]^(1/p)`.
    pub star: Integral,
    pub star_shift: f64,
}

struct Plain {
    mean: f64,
    dev: Integral,
    lo: f64,
    hi: f64,
}

fn plain_deviation(f: &dyn Field, p: f64, r: &Rect) -> Result<Plain> {
    let vol = r.volume();
    let signed = f.integral_signed(r)?;
    let mean = signed.value / vol;
    let mean_err = signed.error / vol;
    let (lo, hi) = f.value_bracket(r)?;
    let reach = (hi - mean).abs().max((mean - lo).abs());
    // |d/da ∫|f - a|^p| ≤ p · vol · reach^(p-1).
    let slope = p * vol * reach.powf(p - 1.0);
    let dev = f.integral_abs_dev_p(r, mean, p)?;
    Ok(Plain { mean, dev: Integral { value: dev.value, error: dev.error + slope * mean_err }, lo, hi })
}

fn to_norm(d: Integral, norm: f64, p: f64) -> Integral {
    let v = d.value.max(0.0) / norm;
    Integral { value: v.powf(1.0 / p), error: root_error(v, d.error / norm, p) }
}

pub fn rect_oscillation(f: &dyn Field, p: f64, r: &Rect, convention: Convention) -> Result<Oscillation> {
    let norm = convention.normalizer(r);
    let Plain { mean, dev, lo, hi } = plain_deviation(f, p, r)?;
    let plain = to_norm(dev, norm, p);

    let (shift, star_dev) = if p == 2.0 {
        (mean, dev)
    } else if let (true, Some(cells)) = (p == 1.0, f.cells(r)?) {
        let a = weighted_median(cells.clone());
        (a, Integral::exact(crate::funcs::cell_sum(&cells, |v| (v - a).abs())))
    } else {
        ternary_min(f, r, p, lo, hi)?
    };
    let (shift, star_dev) = if star_dev.value <= dev.value { (shift, star_dev) } else { (mean, dev) };
    Ok(Oscillation { mean, plain, star: to_norm(star_dev, norm, p), star_shift: shift })
}

fn weighted_median(mut cells: Vec<(f64, f64)>) -> f64 {
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = cells.iter().map(|c| c.1).sum();
    let mut acc = 0.0;
    for (v, w) in &cells {
        acc += w;
        if acc >= total / 2.0 {
            return *v;
        }
    }
    cells.last().map_or(0.0, |c| c.0)
}

fn ternary_min(f: &dyn Field, r: &Rect, p: f64, mut lo: f64, mut hi: f64) -> Result<(f64, Integral)> {
    let g = |a: f64| f.integral_abs_dev_p(r, a, p);
    while hi - lo > CMO_TERNARY {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if g(m1)?.value <= g(m2)?.value {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let a = 0.5 * (lo + hi);
    Ok((a, g(a)?))
}

pub fn cmo_norm(f: &dyn Field, params: &NormParams) -> Result<NormEstimate> {
    rect_search(f, params, |r| Ok(to_norm(plain_deviation(f, params.p, r)?.dev, params.convention.normalizer(r), params.p)))
}

pub fn cmo_star_norm(f: &dyn Field, params: &NormParams) -> Result<NormEstimate> {
    rect_search(f, params, |r| Ok(rect_oscillation(f, params.p, r, params.convention)?.star))
}
