//! Brute-force midpoint sums and candidate-grid suprema.
//!
//! Nothing here uses the closed-form integration paths; the oracle only evaluates the
//! function pointwise, so it can check those paths independently.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::funcs::{FunctionSpec, Integral, Rect};
use crate::numeric::pairwise_sum_by;
use crate::quad::{integrate, QuadTol};

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evals: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_evals: DEFAULT_BUDGET }
    }
}

impl Budget {
    pub fn check(&self, required: u64) -> Result<()> {
        if required > self.max_evals {
            Err(Error::BudgetExceeded { required, allowed: self.max_evals })
        } else {
            Ok(())
        }
    }
}

/// Uniform grid resolution over the integration box, in cells per axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(cells: Vec<usize>) -> Result<Self> {
        if cells.iter().any(|c| *c < 2) {
            return Err(Error::invalid("grid resolution must be at least 2 cells per axis"));
        }
        Ok(GridSpec { cells })
    }

    pub fn uniform(n: usize, cells: usize) -> Result<Self> {
        GridSpec::new(vec![cells; n])
    }

    /// `density` cells per unit length on every axis of `r` (rounded up, at least 2).
    pub fn with_density(r: &Rect, density: f64) -> Result<Self> {
        GridSpec::new(r.half_widths().iter().map(|h| ((2.0 * h * density).ceil() as usize).max(2)).collect())
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| *c as u64).product()
    }
}

struct Lattice {
    lo: Vec<f64>,
    step: Vec<f64>,
    cells: Vec<usize>,
}

impl Lattice {
    fn new(r: &Rect, g: &GridSpec) -> Result<Self> {
        if g.cells.len() != r.dim() {
            return Err(Error::DimensionMismatch { expected: r.dim(), got: g.cells.len() });
        }
        let lo = r.half_widths().iter().map(|h| -h).collect();
        let step = r.half_widths().iter().zip(&g.cells).map(|(h, c)| 2.0 * h / *c as f64).collect();
        Ok(Lattice { lo, step, cells: g.cells.clone() })
    }

    fn center(&self, mut linear: usize, out: &mut [f64]) {
        for k in (0..self.cells.len()).rev() {
            let i = linear % self.cells[k];
            linear /= self.cells[k];
            out[k] = self.lo[k] + (i as f64 + 0.5) * self.step[k];
        }
    }

    fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }
}

/// Midpoint-rule approximation of `∫_r |f|^p`, exact for functions constant on the cells.
pub fn riemann_integral(f: &dyn Field, p: f64, r: &Rect, g: &GridSpec, budget: Budget) -> Result<f64> {
    if f.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: r.dim() });
    }
    budget.check(g.total())?;
    let lattice = Lattice::new(r, g)?;
    let n = r.dim();
    let total = g.total() as usize;
    let term = |i: usize| {
        let mut x = [0.0; 3];
        lattice.center(i, &mut x[..n]);
        f.eval(&x[..n]).abs().powf(p)
    };
    Ok(pairwise_sum_by(0, total, &term) * lattice.cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallIntegral {
    pub value: f64,
    /// Volume of the cells straddling the sphere times the largest `|f|^p` seen on them.
    pub boundary_bound: f64,
}

/// Midpoint sum of `|f|^p` over the cells of `[-R, R]^n` whose centers lie in the closed ball.
pub fn ball_integral(f: &dyn Field, p: f64, radius: f64, g: &GridSpec, budget: Budget) -> Result<BallIntegral> {
    shell_integral(f, p, None, radius, g, budget)
}

/// As [`ball_integral`], restricted to centers with `inner < |x| <= outer`.
pub fn shell_integral(
    f: &dyn Field,
    p: f64,
    inner: Option<f64>,
    outer: f64,
    g: &GridSpec,
    budget: Budget,
) -> Result<BallIntegral> {
    let n = f.dim();
    let r = Rect::cube(n, outer)?;
    budget.check(g.total())?;
    let lattice = Lattice::new(&r, g)?;
    let total = g.total() as usize;
    let out2 = outer * outer;
    let in2 = inner.map(|v| v * v);
    let inside = |d2: f64| d2 <= out2 && in2.map_or(true, |i| d2 > i);
    let term = |i: usize| {
        let mut x = [0.0; 3];
        lattice.center(i, &mut x[..n]);
        if inside(x[..n].iter().map(|v| v * v).sum::<f64>()) {
            f.eval(&x[..n]).abs().powf(p)
        } else {
            0.0
        }
    };
    let value = pairwise_sum_by(0, total, &term) * lattice.cell_volume();
    let straddles = |near: f64, far: f64, s2: f64| near < s2 && far > s2;
    let (count, peak) = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let mut x = [0.0; 3];
            lattice.center(i, &mut x[..n]);
            let (mut near, mut far) = (0.0, 0.0);
            for k in 0..n {
                let a = x[k] - 0.5 * lattice.step[k];
                let b = x[k] + 0.5 * lattice.step[k];
                let lo = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
                let hi = a.abs().max(b.abs());
                near += lo * lo;
                far += hi * hi;
            }
            let cut = straddles(near, far, out2) || in2.map_or(false, |i| straddles(near, far, i));
            cut.then(|| f.eval(&x[..n]).abs().powf(p))
        })
        .fold(|| (0u64, 0.0f64), |(c, m), v| (c + 1, m.max(v)))
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    Ok(BallIntegral { value, boundary_bound: count as f64 * lattice.cell_volume() * peak })
}

/// `∫_{|x| ≤ R} |f|^p` for a two-dimensional piecewise-constant `f`: each horizontal chord is
/// summed exactly over its constant pieces and the chords are integrated adaptively in `y`.
/// `None` when `f` is not piecewise constant on a product grid.
pub fn disk_integral(f: &FunctionSpec, p: f64, radius: f64, tol: QuadTol) -> Result<Option<Integral>> {
    if f.dim()? != 2 {
        return Err(Error::invalid("disk_integral is two-dimensional"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    let (Some(xs), Some(ys)) = (f.constant_breaks(0, -radius, radius), f.constant_breaks(1, -radius, radius)) else {
        return Ok(None);
    };
    let mut breaks = ys;
    for b in &xs {
        let h = (radius * radius - b * b).sqrt();
        breaks.extend([-h, h]);
    }
    breaks.retain(|y| *y > -radius && *y < radius);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let chord = |y: f64| {
        let w = (radius * radius - y * y).max(0.0).sqrt();
        let mut edges = vec![-w];
        edges.extend(xs.iter().copied().filter(|x| *x > -w && *x < w));
        edges.push(w);
        edges.windows(2).map(|e| (e[1] - e[0]) * f.eval_unchecked(&[0.5 * (e[0] + e[1]), y]).abs().powf(p)).sum::<f64>()
    };
    let r = integrate(chord, -radius, radius, &breaks, tol)?;
    Ok(Some(Integral { value: r.value, error: r.error }))
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2),
    }
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half_integer(m: usize) -> f64 {
    if m == 1 {
        std::f64::consts::PI.sqrt()
    } else if m == 2 {
        1.0
    } else {
        (m as f64 / 2.0 - 1.0) * gamma_half_integer(m - 2)
    }
}

/// Maximum of an objective over a Cartesian grid of candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    /// Largest error estimate among the evaluated candidates.
    pub error: f64,
    pub argmax: Vec<f64>,
    pub argmax_index: Vec<usize>,
    /// Objective values in row-major order over `shape`.
    pub values: Vec<f64>,
    pub shape: Vec<usize>,
}

impl SupResult {
    /// Maxima of the objective over the slices `index_axis = k`, for each `k`.
    pub fn slice_maxima(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.shape[axis]];
        for (lin, v) in self.values.iter().enumerate() {
            let k = unravel(lin, &self.shape)[axis];
            out[k] = out[k].max(*v);
        }
        out
    }

    /// True when along every axis the slice maxima do not increase over the last `window`
    /// steps (relative slack `rel`).
    pub fn eventually_nonincreasing(&self, window: usize, rel: f64) -> bool {
        (0..self.shape.len()).all(|axis| {
            let m = self.slice_maxima(axis);
            let start = m.len().saturating_sub(window + 1);
            m[start..].windows(2).all(|w| w[1] <= w[0] + rel * w[0].abs().max(f64::MIN_POSITIVE))
        })
    }
}

fn unravel(mut linear: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = linear % shape[k];
        linear /= shape[k];
    }
    idx
}

/// Evaluates `objective` on every point of `axes[0] × … × axes[n-1]` and returns the maximum.
/// Ties go to the first candidate in row-major order. The objective returns a value and an
/// error estimate.
pub fn grid_sup_search<F>(objective: F, axes: &[Vec<f64>], budget: Budget) -> Result<SupResult>
where
    F: Fn(&[f64]) -> Result<(f64, f64)> + Sync,
{
    if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
        return Err(Error::invalid("sup search needs at least one candidate per axis"));
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: u64 = shape.iter().map(|s| *s as u64).product();
    budget.check(total)?;
    let evaluated: Vec<Result<(f64, f64)>> = (0..total as usize)
        .into_par_iter()
        .map(|lin| {
            let idx = unravel(lin, &shape);
            let point: Vec<f64> = idx.iter().zip(axes).map(|(i, a)| a[*i]).collect();
            objective(&point)
        })
        .collect();
    let mut values = Vec::with_capacity(evaluated.len());
    let mut error = 0.0f64;
    for r in evaluated {
        let (v, e) = r?;
        values.push(v);
        error = error.max(e);
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let argmax_index = unravel(best, &shape);
    let argmax = argmax_index.iter().zip(axes).map(|(i, a)| a[*i]).collect();
    Ok(SupResult { value: values[best], error, argmax, argmax_index, values, shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::FunctionSpec;
    use crate::numeric::dyadic_log_grid;

    #[test]
    fn riemann_examples() {
        let b = Budget::default();
        let c = FunctionSpec::constant(3.0, 2);
        let r = Rect::new(vec![1.0, 1.0]).unwrap();
        approx::assert_relative_eq!(riemann_integral(&c, 1.0, &r, &GridSpec::uniform(2, 7).unwrap(), b).unwrap(), 12.0, max_relative = 1e-12);
        let s = FunctionSpec::staircase(1.0);
        let r = Rect::new(vec![1.0, 2.0]).unwrap();
        approx::assert_relative_eq!(riemann_integral(&s, 1.0, &r, &GridSpec::new(vec![2, 4]).unwrap(), b).unwrap(), 12.0, max_relative = 1e-12);
    }

    #[test]
    fn riemann_converges_for_power_tail() {
        let f = FunctionSpec::RadialPowerTail { exponent: -2.0, dim: 1 };
        let r = Rect::new(vec![4.0]).unwrap();
        let mut last = f64::INFINITY;
        for cells in [80, 800, 8000, 80000] {
            let v = riemann_integral(&f, 1.0, &r, &GridSpec::uniform(1, cells).unwrap(), Budget::default()).unwrap();
            let err = (v - 1.5).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-8);
    }

    #[test]
    fn budget_is_enforced() {
        let f = FunctionSpec::constant(1.0, 3);
        let r = Rect::cube(3, 1.0).unwrap();
        let g = GridSpec::uniform(3, 1000).unwrap();
        let err = riemann_integral(&f, 1.0, &r, &g, Budget { max_evals: 1000 }).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 1_000_000_000, allowed: 1000 }));
    }

    #[test]
    fn ball_examples() {
        let b = Budget::default();
        let one2 = FunctionSpec::constant(1.0, 2);
        let disk = ball_integral(&one2, 1.0, 1.0, &GridSpec::uniform(2, 2000).unwrap(), b).unwrap();
        assert!((disk.value - std::f64::consts::PI).abs() <= disk.boundary_bound);
        assert!(disk.boundary_bound < 1e-2);
        let one1 = FunctionSpec::constant(1.0, 1);
        let seg = ball_integral(&one1, 1.0, 2.0, &GridSpec::uniform(1, 64).unwrap(), b).unwrap();
        approx::assert_relative_eq!(seg.value, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn annulus_area() {
        let one = FunctionSpec::constant(1.0, 2);
        let a = shell_integral(&one, 1.0, Some(1.0), 2.0, &GridSpec::uniform(2, 4000).unwrap(), Budget::default()).unwrap();
        assert!((a.value - 3.0 * std::f64::consts::PI).abs() <= a.boundary_bound);
    }

    #[test]
    fn staircase_ball_integral_refines() {
        // Closed form: 4 + 8 (√3 + 2π/3 − 2) from the central square plus four band-2 arms.
        let exact = 4.0 + 8.0 * (3f64.sqrt() + 2.0 * std::f64::consts::PI / 3.0 - 2.0);
        let s = FunctionSpec::staircase(1.0);
        let mut prev = None;
        for cells in [1000, 2000, 4000] {
            let v = ball_integral(&s, 1.0, 2.0, &GridSpec::uniform(2, cells).unwrap(), Budget::default()).unwrap();
            if let Some(p) = prev {
                let d: f64 = v.value - p;
                assert!(d.abs() < 1e-2);
            }
            prev = Some(v.value);
            assert!((v.value - exact).abs() <= v.boundary_bound, "{} vs {exact}", v.value);
        }
        assert!((prev.unwrap() - exact).abs() < 1e-3);
    }

    #[test]
    fn sup_search_ties_and_argmax() {
        let axes = vec![dyadic_log_grid(0, 3, 4), dyadic_log_grid(0, 3, 4)];
        let flat = grid_sup_search(|_| Ok((2.0, 0.0)), &axes, Budget::default()).unwrap();
        assert_eq!(flat.value, 2.0);
        assert_eq!(flat.argmax, vec![1.0, 1.0]);
        assert!(flat.eventually_nonincreasing(8, 0.0));
        let grow = grid_sup_search(|x| Ok((x[1], 0.0)), &axes, Budget::default()).unwrap();
        assert_eq!(grow.argmax, vec![1.0, 8.0]);
        assert!(!grow.eventually_nonincreasing(8, 0.0));
    }

    #[test]
    fn sup_search_staircase_objective() {
        // Volume average over [-1,1]×[-R,R] is (m+1)/2 at integer R = m.
        let s = FunctionSpec::staircase(1.0);
        let axes = vec![vec![1.0], dyadic_log_grid(0, 5, 4)];
        let res = grid_sup_search(
            |x| {
                let r = Rect::new(x.to_vec())?;
                Ok((crate::funcs::rect_integral_abs_p(&s, 1.0, &r)?.value / r.volume(), 0.0))
            },
            &axes,
            Budget::default(),
        )
        .unwrap();
        assert_eq!(res.value, 16.5);
        assert_eq!(res.argmax, vec![1.0, 32.0]);
    }
    #[test]
    fn disk_integral_matches_staircase_closed_form() {
        let exact = 4.0 + 8.0 * (3f64.sqrt() + 2.0 * std::f64::consts::PI / 3.0 - 2.0);
        let v = disk_integral(&FunctionSpec::staircase(1.0), 1.0, 2.0, QuadTol::new(1e-13, 1e-12)).unwrap().unwrap();
        assert!((v.value - exact).abs() < 1e-9, "{} vs {exact}", v.value);
        let one = disk_integral(&FunctionSpec::constant(3.0, 2), 2.0, 1.5, QuadTol::new(1e-13, 1e-12)).unwrap().unwrap();
        assert!((one.value - 9.0 * std::f64::consts::PI * 2.25).abs() < 1e-9);
        assert!(disk_integral(&FunctionSpec::RadialPowerTail { exponent: -3.0, dim: 2 }, 1.0, 2.0, QuadTol::new(1e-9, 1e-9)).unwrap().is_none());
    }
}
