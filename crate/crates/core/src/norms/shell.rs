use crate::error::{Error, Result};
use crate::field::Field;
use crate::funcs::{Integral, Rect};
use crate::numeric::dyadic_log_grid;
use crate::oracle::{grid_sup_search, shell_integral, unit_ball_volume, GridSpec};

use super::{root_error, Attained, Exponent, HerzParams, NormEstimate, NormParams};

const MONOTONE_SLACK: f64 = 1e-12;

/// Grid resolution per axis for ball and annulus integrals.
pub fn ball_cells(n: usize, params: &NormParams) -> usize {
    params.ball_cells.unwrap_or(match n {
        2 => 1024,
        _ => 160,
    })
}

/// `∫` of `|f|^p` over `{inner < |x| ≤ outer}` (`inner = None`: the closed ball). Exact in one
/// dimension, grid oracle otherwise.
fn annulus(f: &dyn Field, p: f64, inner: Option<f64>, outer: f64, params: &NormParams) -> Result<Integral> {
    let n = f.dim();
    if n == 1 {
        let full = f.integral_abs_p(&Rect::new(vec![outer])?, p)?;
        return match inner {
            None => Ok(full),
            Some(r) => {
                let mut d = full - f.integral_abs_p(&Rect::new(vec![r])?, p)?;
                d.value = d.value.max(0.0);
                Ok(d)
            }
        };
    }
    let g = GridSpec::uniform(n, ball_cells(n, params))?;
    let b = shell_integral(f, p, inner, outer, &g, params.budget)?;
    Ok(Integral { value: b.value, error: b.boundary_bound })
}

/// `(1/|B_R|) ∫_{B_R} |f|^p`, before the `1/p` root.
pub fn ball_average(f: &dyn Field, p: f64, radius: f64, params: &NormParams) -> Result<Integral> {
    let vol = unit_ball_volume(f.dim()) * radius.powi(f.dim() as i32);
    Ok(annulus(f, p, None, radius, params)?.scale(1.0 / vol))
}

/// `sup_R (1/|B_R| ∫_{B_R} |f|^p)^(1/p)` over log-spaced radii.
pub fn bp_ball_norm(f: &dyn Field, params: &NormParams) -> Result<NormEstimate> {
    params.validate()?;
    let radii = vec![dyadic_log_grid(params.variant.lowest_exponent(), params.j_max as i32, params.per_octave)];
    let p = params.p;
    let sup = grid_sup_search(
        |x| {
            let a = ball_average(f, p, x[0], params)?;
            Ok((a.value.max(0.0).powf(1.0 / p), root_error(a.value, a.error, p)))
        },
        &radii,
        params.budget,
    )?;
    let per = params.per_octave as usize;
    let converged = sup.eventually_nonincreasing(2 * per, MONOTONE_SLACK);
    let note = if converged {
        "ball averages nonincreasing over the last two octaves".to_string()
    } else {
        "not converged: ball averages still growing at the largest radius".to_string()
    };
    Ok(NormEstimate { value: sup.value, attained: Attained::Radius(sup.argmax[0]), converged, error_bound: sup.error, note })
}

/// Herz norm over the ball shells `k = 0..=k_max`. Uses `params.p`, its budget and ball resolution.
pub fn herz_norm(f: &dyn Field, params: &NormParams, hp: &HerzParams) -> Result<NormEstimate> {
    params.validate()?;
    hp.validate()?;
    let n = f.dim() as f64;
    let p = params.p;
    let mut terms = Vec::with_capacity(hp.k_max as usize + 1);
    for k in 0..=hp.k_max as i32 {
        let outer = 2f64.powi(k);
        let inner = (k > 0).then(|| 2f64.powi(k - 1));
        let i = annulus(f, p, inner, outer, params)?;
        let w = 2f64.powf(n * k as f64 * hp.alpha);
        terms.push((w * i.value.powf(1.0 / p), w * root_error(i.value, i.error, p)));
    }
    let last = terms.len() - 1;
    match hp.q {
        Exponent::Infinite => {
            let mut best = 0;
            for (k, t) in terms.iter().enumerate() {
                if t.0 > terms[best].0 {
                    best = k;
                }
            }
            let error = terms.iter().map(|t| t.1).fold(0.0, f64::max);
            let converged = last < 2 || (terms[last].0 <= terms[last - 1].0 * (1.0 + MONOTONE_SLACK)
                && terms[last - 1].0 <= terms[last - 2].0 * (1.0 + MONOTONE_SLACK));
            let note = if converged {
                "shell terms nonincreasing over the last two shells".to_string()
            } else {
                "not converged: shell terms still growing".to_string()
            };
            Ok(NormEstimate { value: terms[best].0, attained: Attained::Shell(best as u32), converged, error_bound: error, note })
        }
        Exponent::Finite(q) => {
            let sum: f64 = crate::numeric::stable_sum(terms.iter().map(|t| t.0.powf(q)).collect());
            let value = sum.powf(1.0 / q);
            // d/dt_k (Σ t^q)^(1/q) = (t_k / value)^(q-1) ≤ 1.
            let error = terms.iter().map(|t| t.1).sum();
            let tail_share = if sum > 0.0 { terms[last].0.powf(q) / sum } else { 0.0 };
            let converged = tail_share <= 1e-6;
            let note = if converged {
                format!("truncated after shell {}; last shell carries {:.2e} of the sum", hp.k_max, tail_share)
            } else {
                format!("not converged: last shell carries {:.2e} of the truncated sum", tail_share)
            };
            if !value.is_finite() {
                return Err(Error::NotIntegrable("herz sum is not finite".into()));
            }
            Ok(NormEstimate { value, attained: Attained::Sum, converged, error_bound: error, note })
        }
    }
}

/// `herz(α = -1/p, q = ∞) ≤ ω_n^(1/p) · ball`: each shell lies in the ball of its outer radius.
pub fn herz_ball_ratio_bound(n: usize, p: f64) -> f64 {
    unit_ball_volume(n).powf(1.0 / p)
}

/// `ball ≤ C · herz(α = -1/p, q = ∞)`: a ball with `2^{k-1} < R ≤ 2^k` is covered by the
/// shells `i ≤ k`, whose weighted masses sum to at most `2^{n(k+1)} / (2^n - 1)`, while
/// `|B_R| ≥ ω_n 2^{n(k-1)}`.
pub fn ball_herz_ratio_bound(n: usize, p: f64) -> f64 {
    let two_n = 2f64.powi(n as i32);
    (two_n * two_n / ((two_n - 1.0) * unit_ball_volume(n))).powf(1.0 / p)
}

/// `ball ≤ C · rect` (volume convention): `B_R` sits inside the cube of half-width `R`.
pub fn ball_rect_ratio_bound(n: usize, p: f64) -> f64 {
    (2f64.powi(n as i32) / unit_ball_volume(n)).powf(1.0 / p)
}
