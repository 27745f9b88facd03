use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value of a weighted series, or the reason it has none.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Series {
    Convergent { value: f64 },
    /// The terms decay no faster than a geometric sequence with this ratio (`>= 1`).
    Divergent { ratio: f64 },
}

impl Series {
    pub fn value(self) -> Option<f64> {
        match self {
            Series::Convergent { value } => Some(value),
            Series::Divergent { .. } => None,
        }
    }

    fn geometric(first: f64, ratio: f64) -> Self {
        if ratio < 1.0 {
            Series::Convergent { value: first / (1.0 - ratio) }
        } else {
            Series::Divergent { ratio }
        }
    }
}

/// Bound on `Σ_{k>K} φ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Finite { k: usize },
    /// `φ_k ≤ bound · ratio^k`.
    Geometric { bound: f64, ratio: f64 },
}

/// Weight of the discrete operator `Σ_k φ_k f(r_k x)`, indices from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscreteWeight {
    /// `r_k = rho^k`, `φ_k = scale · theta^k`.
    Geometric { rho: f64, scale: f64, theta: f64 },
    Finite { r: Vec<f64>, phi: Vec<f64> },
}

impl DiscreteWeight {
    pub fn geometric(rho: f64, scale: f64, theta: f64) -> Self {
        DiscreteWeight::Geometric { rho, scale, theta }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiscreteWeight::Geometric { rho, scale, theta } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::invalid(format!("rho must lie in (0, 1), got {rho}")));
                }
                if !(*scale > 0.0 && scale.is_finite() && *theta > 0.0 && theta.is_finite()) {
                    return Err(Error::invalid("geometric weight needs positive finite scale and theta"));
                }
            }
            DiscreteWeight::Finite { r, phi } => {
                if r.is_empty() || r.len() != phi.len() {
                    return Err(Error::invalid("finite weight needs equally long, nonempty r and phi"));
                }
                check_sequence(r)?;
                if phi.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::invalid("weights phi must be positive and finite"));
                }
            }
        }
        self.spot_check()
    }

    pub fn r(&self, k: usize) -> f64 {
        match self {
            DiscreteWeight::Geometric { rho, .. } => rho.powi(k as i32),
            DiscreteWeight::Finite { r, .. } => r[k - 1],
        }
    }

    pub fn phi(&self, k: usize) -> f64 {
        match self {
            DiscreteWeight::Geometric { scale, theta, .. } => scale * theta.powi(k as i32),
            DiscreteWeight::Finite { phi, .. } => phi[k - 1],
        }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            DiscreteWeight::Geometric { .. } => None,
            DiscreteWeight::Finite { r, .. } => Some(r.len()),
        }
    }

    pub fn tail(&self) -> Tail {
        match self {
            DiscreteWeight::Geometric { scale, theta, .. } => Tail::Geometric { bound: *scale, ratio: *theta },
            DiscreteWeight::Finite { r, .. } => Tail::Finite { k: r.len() },
        }
    }

    /// Checks the tail descriptor against the weights at sampled indices.
    pub fn spot_check(&self) -> Result<()> {
        if let Tail::Geometric { bound, ratio } = self.tail() {
            for k in [1usize, 2, 3, 5, 8, 13, 21, 34] {
                if self.phi(k) > bound * ratio.powi(k as i32) * (1.0 + 1e-12) {
                    return Err(Error::invalid(format!("tail descriptor violated at k = {k}")));
                }
            }
        }
        Ok(())
    }

    /// `Σ_{k>K} φ_k`.
    pub fn tail_mass(&self, k: usize) -> f64 {
        match self.tail() {
            Tail::Finite { k: len } => (k + 1..=len).map(|i| self.phi(i)).sum(),
            Tail::Geometric { bound, ratio } => {
                if ratio < 1.0 {
                    bound * ratio.powi(k as i32 + 1) / (1.0 - ratio)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `Σ_k r_k^s φ_k`.
    pub fn weighted_series(&self, s: f64) -> Series {
        match self {
            DiscreteWeight::Geometric { rho, scale, theta } => {
                let q = theta * rho.powf(s);
                Series::geometric(scale * q, q)
            }
            DiscreteWeight::Finite { r, phi } => {
                Series::Convergent { value: crate::numeric::stable_sum(r.iter().zip(phi).map(|(r, f)| r.powf(s) * f).collect()) }
            }
        }
    }

    pub fn total_mass(&self) -> Series {
        self.weighted_series(0.0)
    }
}

fn check_sequence(r: &[f64]) -> Result<()> {
    if r.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
        return Err(Error::invalid("contraction factors must lie in (0, 1]"));
    }
    if r.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("contraction factors must be strictly decreasing"));
    }
    Ok(())
}

/// One explicit entry of a finite grid weight; indices start at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub index: Vec<usize>,
    pub phi: f64,
}

/// Weight of the grid operator `Σ_k Φ(k) f(r^{(1)}_{k_1} x_1, …, r^{(n)}_{k_n} x_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridWeight {
    /// `r^{(j)}_k = rho_j^k`, `Φ(k) = scale · Π_j theta_j^{k_j}`.
    Product { rho: Vec<f64>, scale: f64, theta: Vec<f64> },
    /// `r^{(j)}_k = rho_j^k`, `Φ(k, …, k) = scale · theta^k`, zero off the diagonal.
    Diagonal { rho: Vec<f64>, scale: f64, theta: f64 },
    Finite { r: Vec<Vec<f64>>, entries: Vec<GridEntry> },
}

impl GridWeight {
    pub fn dim(&self) -> usize {
        match self {
            GridWeight::Product { rho, .. } | GridWeight::Diagonal { rho, .. } => rho.len(),
            GridWeight::Finite { r, .. } => r.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 || n > crate::funcs::MAX_DIM {
            return Err(Error::invalid(format!("grid weight dimension must be 1..=3, got {n}")));
        }
        let check_rho = |rho: &[f64]| {
            if rho.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
                Err(Error::invalid("every rho must lie in (0, 1)"))
            } else {
                Ok(())
            }
        };
        match self {
            GridWeight::Product { rho, scale, theta } => {
                check_rho(rho)?;
                if theta.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
                }
                if !(*scale > 0.0 && scale.is_finite()) || theta.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return Err(Error::invalid("product weight needs positive finite scale and theta"));
                }
            }
            GridWeight::Diagonal { rho, scale, theta } => {
                check_rho(rho)?;
                if !(*scale > 0.0 && scale.is_finite() && *theta > 0.0 && theta.is_finite()) {
                    return Err(Error::invalid("diagonal weight needs positive finite scale and theta"));
                }
            }
            GridWeight::Finite { r, entries } => {
                for axis in r {
                    if axis.is_empty() {
                        return Err(Error::invalid("every axis sequence must be nonempty"));
                    }
                    check_sequence(axis)?;
                }
                if entries.is_empty() {
                    return Err(Error::invalid("finite grid weight needs at least one entry"));
                }
                for e in entries {
                    if e.index.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, got: e.index.len() });
                    }
                    if e.index.iter().zip(r).any(|(k, axis)| *k == 0 || *k > axis.len()) {
                        return Err(Error::invalid(format!("grid index {:?} out of range", e.index)));
                    }
                    if !(e.phi > 0.0 && e.phi.is_finite()) {
                        return Err(Error::invalid("grid weights must be positive and finite"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn r(&self, axis: usize, k: usize) -> f64 {
        match self {
            GridWeight::Product { rho, .. } | GridWeight::Diagonal { rho, .. } => rho[axis].powi(k as i32),
            GridWeight::Finite { r, .. } => r[axis][k - 1],
        }
    }

    /// Nonzero terms `(index, Φ)` with every index at most `k_max` (for the infinite families).
    pub fn terms(&self, k_max: usize) -> Vec<(Vec<usize>, f64)> {
        match self {
            GridWeight::Product { scale, theta, .. } => {
                let n = theta.len();
                let mut out = Vec::new();
                let mut idx = vec![1usize; n];
                loop {
                    let phi = scale * idx.iter().zip(theta).map(|(k, t)| t.powi(*k as i32)).product::<f64>();
                    out.push((idx.clone(), phi));
                    let mut a = n;
                    loop {
                        if a == 0 {
                            return out;
                        }
                        a -= 1;
                        if idx[a] < k_max {
                            idx[a] += 1;
                            break;
                        }
                        idx[a] = 1;
                    }
                }
            }
            GridWeight::Diagonal { rho, scale, theta } => {
                (1..=k_max).map(|k| (vec![k; rho.len()], scale * theta.powi(k as i32))).collect()
            }
            GridWeight::Finite { entries, .. } => entries.iter().map(|e| (e.index.clone(), e.phi)).collect(),
        }
    }

    /// Mass of the terms with some index above `K`.
    pub fn tail_mass(&self, k: usize) -> f64 {
        match self {
            GridWeight::Product { scale, theta, .. } => {
                if theta.iter().any(|t| *t >= 1.0) {
                    return f64::INFINITY;
                }
                let total = scale * theta.iter().map(|t| t / (1.0 - t)).product::<f64>();
                let log_kept: f64 = theta.iter().map(|t| (-t.powi(k as i32)).ln_1p()).sum();
                total * -log_kept.exp_m1()
            }
            GridWeight::Diagonal { scale, theta, .. } => {
                if *theta >= 1.0 {
                    f64::INFINITY
                } else {
                    scale * theta.powi(k as i32 + 1) / (1.0 - theta)
                }
            }
            GridWeight::Finite { .. } => 0.0,
        }
    }

    /// Whether [`Self::terms`] with this `K` already lists every term.
    pub fn is_finite(&self) -> bool {
        matches!(self, GridWeight::Finite { .. })
    }

    /// `Σ_k Φ(k) Π_j (r^{(j)}_{k_j})^{s_j}`.
    pub fn weighted_series(&self, s: &[f64]) -> Series {
        match self {
            GridWeight::Product { rho, scale, theta } => {
                let mut value = *scale;
                let mut worst: f64 = 0.0;
                for ((r, t), s) in rho.iter().zip(theta).zip(s) {
                    let q = t * r.powf(*s);
                    worst = worst.max(q);
                    value *= q / (1.0 - q);
                }
                if worst >= 1.0 {
                    Series::Divergent { ratio: worst }
                } else {
                    Series::Convergent { value }
                }
            }
            GridWeight::Diagonal { rho, scale, theta } => {
                let q = theta * rho.iter().zip(s).map(|(r, s)| r.powf(*s)).product::<f64>();
                Series::geometric(scale * q, q)
            }
            GridWeight::Finite { entries, .. } => Series::Convergent {
                value: crate::numeric::stable_sum(
                    entries
                        .iter()
                        .map(|e| e.phi * e.index.iter().enumerate().map(|(j, k)| self.r(j, *k).powf(s[j])).product::<f64>())
                        .collect(),
                ),
            },
        }
    }

    pub fn total_mass(&self) -> Series {
        self.weighted_series(&vec![0.0; self.dim()])
    }
}

/// `coef · t^gamma` on `[lo, hi] ⊆ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monomial {
    pub lo: f64,
    pub hi: f64,
    pub coef: f64,
    pub gamma: f64,
}

impl Monomial {
    /// `∫_lo^hi coef t^(gamma + s) dt`, `None` when it diverges at 0.
    pub fn moment(&self, s: f64) -> Option<f64> {
        integrate_power(self.coef, self.gamma + s, self.lo, self.hi)
    }
}

/// `∫_a^b c t^e dt` for `0 ≤ a ≤ b`; `None` when divergent.
pub(crate) fn integrate_power(c: f64, e: f64, a: f64, b: f64) -> Option<f64> {
    if a >= b || c == 0.0 {
        return Some(0.0);
    }
    let k = e + 1.0;
    if k == 0.0 {
        return (a > 0.0).then(|| c * (b / a).ln());
    }
    if k < 0.0 && a == 0.0 {
        return None;
    }
    Some(c * (b.powf(k) - a.powf(k)) / k)
}

/// A polynomial density piece on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyPiece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

fn default_scale() -> f64 {
    1.0
}

/// Density `φ` on `[0, 1]^n` of the continuous operator `∫ f(t ∘ x) φ(t) dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContinuousWeight {
    Constant { c: f64, dim: usize },
    /// `scale · Π_i t_i^{beta_i}`.
    SeparablePower { scale: f64, betas: Vec<f64> },
    /// `scale · Π_i p_i(t_i)` with each `p_i` piecewise polynomial over a tiling of `[0, 1]`.
    SeparablePiecewise {
        #[serde(default = "default_scale")]
        scale: f64,
        axes: Vec<Vec<PolyPiece>>,
    },
}

impl ContinuousWeight {
    pub fn dim(&self) -> usize {
        match self {
            ContinuousWeight::Constant { dim, .. } => *dim,
            ContinuousWeight::SeparablePower { betas, .. } => betas.len(),
            ContinuousWeight::SeparablePiecewise { axes, .. } => axes.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 || n > crate::funcs::MAX_DIM {
            return Err(Error::invalid(format!("weight dimension must be 1..=3, got {n}")));
        }
        match self {
            ContinuousWeight::Constant { c, .. } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::invalid("constant density must be positive"));
                }
            }
            ContinuousWeight::SeparablePower { scale, betas } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("density scale must be positive"));
                }
                if betas.iter().any(|b| !(*b > -1.0 && b.is_finite())) {
                    return Err(Error::invalid("every beta must exceed -1"));
                }
            }
            ContinuousWeight::SeparablePiecewise { scale, axes } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("density scale must be positive"));
                }
                for pieces in axes {
                    let mut at = 0.0;
                    for piece in pieces {
                        if piece.lo != at || !(piece.hi > piece.lo) {
                            return Err(Error::invalid("density pieces must tile [0, 1] in order"));
                        }
                        at = piece.hi;
                        // Positivity is spot-checked on interior points.
                        for s in 1..16 {
                            let t = piece.lo + (piece.hi - piece.lo) * s as f64 / 16.0;
                            if !(horner(&piece.coeffs, t) > 0.0) {
                                return Err(Error::invalid(format!("density is not positive at t = {t}")));
                            }
                        }
                    }
                    if at != 1.0 {
                        return Err(Error::invalid("density pieces must tile [0, 1] in order"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The density as `scale · Π_i Σ monomials_i(t_i)`.
    pub fn separable(&self) -> (f64, Vec<Vec<Monomial>>) {
        let unit = || vec![Monomial { lo: 0.0, hi: 1.0, coef: 1.0, gamma: 0.0 }];
        match self {
            ContinuousWeight::Constant { c, dim } => (*c, vec![unit(); *dim]),
            ContinuousWeight::SeparablePower { scale, betas } => {
                (*scale, betas.iter().map(|b| vec![Monomial { lo: 0.0, hi: 1.0, coef: 1.0, gamma: *b }]).collect())
            }
            ContinuousWeight::SeparablePiecewise { scale, axes } => (
                *scale,
                axes.iter()
                    .map(|pieces| {
                        pieces
                            .iter()
                            .flat_map(|p| {
                                p.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(m, c)| Monomial {
                                    lo: p.lo,
                                    hi: p.hi,
                                    coef: *c,
                                    gamma: m as f64,
                                })
                            })
                            .collect()
                    })
                    .collect(),
            ),
        }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        match self {
            ContinuousWeight::Constant { c, .. } => *c,
            ContinuousWeight::SeparablePower { scale, betas } => scale * t.iter().zip(betas).map(|(t, b)| t.powf(*b)).product::<f64>(),
            ContinuousWeight::SeparablePiecewise { scale, axes } => {
                let mut acc = *scale;
                for (pieces, ti) in axes.iter().zip(t) {
                    let piece = pieces.iter().find(|p| *ti >= p.lo && *ti <= p.hi);
                    acc *= piece.map_or(0.0, |p| horner(&p.coeffs, *ti));
                }
                acc
            }
        }
    }

    /// Interior breakpoints of the density along `axis`.
    pub fn breakpoints(&self, axis: usize) -> Vec<f64> {
        match self {
            ContinuousWeight::SeparablePiecewise { axes, .. } => {
                axes[axis].iter().map(|p| p.hi).filter(|h| *h < 1.0).collect()
            }
            _ => Vec::new(),
        }
    }

    /// `∫_{[0,1]^n} Π_i t_i^{s_i} φ(t) dt`, diverging when some exponent is too negative.
    pub fn moment(&self, s: &[f64]) -> Series {
        let (scale, axes) = self.separable();
        let mut value = scale;
        for (terms, si) in axes.iter().zip(s) {
            let mut axis = 0.0;
            for m in terms {
                match m.moment(*si) {
                    Some(v) => axis += v,
                    None => return Series::Divergent { ratio: 1.0 },
                }
            }
            value *= axis;
        }
        Series::Convergent { value }
    }

    pub fn mass(&self) -> f64 {
        self.moment(&vec![0.0; self.dim()]).value().unwrap_or(f64::INFINITY)
    }
}

pub(crate) fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}
