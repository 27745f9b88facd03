use crate::error::{Error, Result};
use crate::funcs::{Factor1D, FunctionSpec};
use crate::numeric::stable_sum;

use super::image::{Image, TensorField, TensorSum};
use super::weights::{DiscreteWeight, GridWeight};
use super::Applied;

/// Largest truncation depth tried before giving up on a tail bound.
const MAX_DEPTH: usize = 100_000;
/// Largest number of multi-indices summed by the grid operator.
const MAX_GRID_TERMS: usize = 2_000_000;

/// Smallest `K >= 1` with `tail(K) · bound < tol`.
fn truncation(tail: impl Fn(usize) -> f64, bound: f64, tol: f64, cap: usize) -> Result<usize> {
    if bound == 0.0 {
        return Ok(1);
    }
    for k in 1..=cap {
        if tail(k) * bound < tol {
            return Ok(k);
        }
    }
    Err(Error::TailUnavailable(format!("tail bound does not fall below {tol:e} within {cap} terms")))
}

fn sup_on_box(f: &FunctionSpec, half: &[f64]) -> Result<f64> {
    f.sup_abs_on_box(half)
        .ok_or_else(|| Error::TailUnavailable("no finite bound for |f| along the contracted segment".into()))
}

fn check_point(f: &FunctionSpec, x: &[f64]) -> Result<usize> {
    let n = f.dim()?;
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    Ok(n)
}

/// `Σ_k φ_k f(r_k x)`, truncated so that the neglected tail is below `tol`.
pub fn apply_discrete(f: &FunctionSpec, w: &DiscreteWeight, x: &[f64], tol: f64) -> Result<Applied> {
    w.validate()?;
    check_point(f, x)?;
    let (k, error_bound) = match w.len() {
        Some(len) => (len, 0.0),
        None => {
            let half: Vec<f64> = x.iter().map(|v| w.r(1) * v.abs()).collect();
            let m = sup_on_box(f, &half)?;
            let k = truncation(|k| w.tail_mass(k), m, tol, MAX_DEPTH)?;
            (k, w.tail_mass(k) * m)
        }
    };
    let mut y = x.to_vec();
    let terms = (1..=k)
        .map(|i| {
            let r = w.r(i);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = r * xi;
            }
            w.phi(i) * f.eval_unchecked(&y)
        })
        .collect();
    Ok(Applied { value: stable_sum(terms), error_bound, terms: k })
}

fn grid_depth(w: &GridWeight, bound: f64, tol: f64) -> Result<usize> {
    if w.is_finite() {
        return Ok(0);
    }
    let n = w.dim() as u32;
    let cap = match w {
        GridWeight::Diagonal { .. } => MAX_DEPTH,
        _ => (MAX_GRID_TERMS as f64).powf(1.0 / n as f64).floor() as usize,
    };
    truncation(|k| w.tail_mass(k), bound, tol, cap)
}

/// `Σ_k Φ(k) f(r^{(1)}_{k_1} x_1, …)`, truncated to `k_j ≤ K` with neglected mass below `tol`.
pub fn apply_grid_discrete(f: &FunctionSpec, w: &GridWeight, x: &[f64], tol: f64) -> Result<Applied> {
    w.validate()?;
    let n = check_point(f, x)?;
    if w.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.dim() });
    }
    let (k, error_bound) = if w.is_finite() {
        (0, 0.0)
    } else {
        let half: Vec<f64> = x.iter().enumerate().map(|(j, v)| w.r(j, 1) * v.abs()).collect();
        let m = sup_on_box(f, &half)?;
        let k = grid_depth(w, m, tol)?;
        (k, w.tail_mass(k) * m)
    };
    let terms = w.terms(k);
    let count = terms.len();
    let mut y = x.to_vec();
    let values = terms
        .into_iter()
        .map(|(idx, phi)| {
            for (j, (yi, xi)) in y.iter_mut().zip(x).enumerate() {
                *yi = w.r(j, idx[j]) * xi;
            }
            phi * f.eval_unchecked(&y)
        })
        .collect();
    Ok(Applied { value: stable_sum(values), error_bound, terms: count })
}

fn global_sup(f: &FunctionSpec) -> Result<f64> {
    f.sup_abs().ok_or_else(|| Error::TailUnavailable("f is not bounded, so the truncated image has no uniform bound".into()))
}

/// The truncated image `Σ_{k≤K} φ_k f(r_k ·)` as a function, with its uniform truncation error.
pub fn discrete_image(f: &FunctionSpec, w: &DiscreteWeight, tol: f64) -> Result<Image> {
    w.validate()?;
    let n = f.dim()?;
    let (k, uniform_error) = match w.len() {
        Some(len) => (len, 0.0),
        None => {
            let m = global_sup(f)?;
            let k = truncation(|k| w.tail_mass(k), m, tol, MAX_DEPTH)?;
            (k, w.tail_mass(k) * m)
        }
    };
    let combo = FunctionSpec::combo((1..=k).map(|i| (w.phi(i), f.clone().scaled(vec![w.r(i); n]))).collect());
    Ok(Image { field: Box::new(combo), uniform_error, terms: k })
}

fn factor_spec(g: &Factor1D) -> FunctionSpec {
    FunctionSpec::tensor(vec![g.factor.clone()]).scaled(vec![g.scale])
}

/// As [`discrete_image`] for the grid operator. Tensor-product `f` under a product weight
/// gives a tensor-product image, whose rectangle integrals factor.
pub fn grid_image(f: &FunctionSpec, w: &GridWeight, tol: f64) -> Result<Image> {
    w.validate()?;
    let n = f.dim()?;
    if w.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.dim() });
    }
    let (k, uniform_error) = if w.is_finite() {
        (0, 0.0)
    } else {
        let m = global_sup(f)?;
        let k = grid_depth(w, m, tol)?;
        (k, w.tail_mass(k) * m)
    };
    if let (GridWeight::Product { rho, scale, theta }, Some(expansion)) = (w, f.tensor_terms()) {
        let mut parts: Vec<TensorField> = expansion
            .into_iter()
            .map(|(coef, factors)| {
                let axes = factors
                    .iter()
                    .zip(rho.iter().zip(theta))
                    .map(|(g, (r, t))| {
                        let g = factor_spec(g);
                        let combo = FunctionSpec::combo(
                            (1..=k).map(|i| (t.powi(i as i32), g.clone().scaled(vec![r.powi(i as i32)]))).collect(),
                        );
                        Box::new(combo) as Box<dyn crate::Field>
                    })
                    .collect();
                TensorField { coef: coef * scale, factors: axes }
            })
            .collect();
        let field: Box<dyn crate::Field> =
            if parts.len() == 1 { Box::new(parts.pop().expect("one part")) } else { Box::new(TensorSum::new(parts)) };
        return Ok(Image { field, uniform_error, terms: k.pow(n as u32) });
    }
    let terms = w.terms(k);
    let count = terms.len();
    let combo = FunctionSpec::combo(
        terms
            .into_iter()
            .map(|(idx, phi)| (phi, f.clone().scaled(idx.iter().enumerate().map(|(j, k)| w.r(j, *k)).collect())))
            .collect(),
    );
    Ok(Image { field: Box::new(combo), uniform_error, terms: count })
}
