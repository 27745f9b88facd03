//! One-dimensional piecewise formulas: polynomials and signed powers on intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Formula {
    /// `Σ coeffs[m] x^m`.
    Poly { coeffs: Vec<f64> },
    /// `coef · |x|^exponent`.
    Power { coef: f64, exponent: f64 },
}

impl Formula {
    pub fn constant(c: f64) -> Self {
        Formula::Poly { coeffs: vec![c] }
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Formula::Poly { coeffs: vec![c0, c1] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Formula::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Formula::Power { coef, exponent } => {
                if *coef == 0.0 {
                    0.0
                } else {
                    coef * x.abs().powf(*exponent)
                }
            }
        }
    }

    fn trimmed(coeffs: &[f64]) -> &[f64] {
        let mut n = coeffs.len();
        while n > 0 && coeffs[n - 1] == 0.0 {
            n -= 1;
        }
        &coeffs[..n]
    }

    /// The constant value, when the formula does not depend on `x`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Formula::Poly { coeffs } => match Self::trimmed(coeffs) {
                [] => Some(0.0),
                [c] => Some(*c),
                _ => None,
            },
            Formula::Power { coef, exponent } => (*coef == 0.0 || *exponent == 0.0).then_some(*coef),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = match self {
            Formula::Poly { coeffs } => coeffs.iter().all(|c| c.is_finite()),
            Formula::Power { coef, exponent } => coef.is_finite() && exponent.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::invalid("formula coefficients must be finite"))
        }
    }

    /// `∫_a^b |formula|^p dx` in closed form, for `a < b`.
    pub fn abs_p_integral(&self, a: f64, b: f64, p: f64) -> Result<f64> {
        match self {
            Formula::Poly { coeffs } => {
                let c = Self::trimmed(coeffs);
                match c {
                    [] => Ok(0.0),
                    [c0] => Ok(c0.abs().powf(p) * (b - a)),
                    [c0, c1] => {
                        let g = |x: f64| {
                            let u = c0 + c1 * x;
                            u.signum() * u.abs().powf(p + 1.0) / ((p + 1.0) * c1)
                        };
                        Ok(g(b) - g(a))
                    }
                    _ => {
                        if p.fract() == 0.0 && (p as u64) % 2 == 0 && p <= 16.0 {
                            let pow = poly_pow(c, p as usize);
                            Ok(poly_antiderivative_eval(&pow, b) - poly_antiderivative_eval(&pow, a))
                        } else {
                            Err(Error::NeedsOracle(format!(
                                "polynomial of degree {} with exponent p={p}",
                                c.len() - 1
                            )))
                        }
                    }
                }
            }
            Formula::Power { coef, exponent } => {
                if *coef == 0.0 {
                    return Ok(0.0);
                }
                Ok(coef.abs().powf(p) * abs_power_integral(a, b, exponent * p)?)
            }
        }
    }

    /// `∫_a^b formula dx` in closed form, for `a < b`.
    pub fn signed_integral(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Formula::Poly { coeffs } => Ok(poly_antiderivative_eval(coeffs, b) - poly_antiderivative_eval(coeffs, a)),
            Formula::Power { coef, exponent } => {
                if *coef == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(coef * abs_power_integral(a, b, *exponent)?)
                }
            }
        }
    }

    /// An upper bound for `|formula|` on `[a, b]` (exact for constants, linear and power pieces).
    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        match self {
            Formula::Poly { coeffs } => match Self::trimmed(coeffs) {
                [] => 0.0,
                [c0] => c0.abs(),
                [_, _] => self.eval(a).abs().max(self.eval(b).abs()),
                c => {
                    let m = a.abs().max(b.abs());
                    c.iter().enumerate().map(|(k, ck)| ck.abs() * m.powi(k as i32)).sum()
                }
            },
            Formula::Power { coef, exponent } => {
                if *coef == 0.0 {
                    return 0.0;
                }
                let far = a.abs().max(b.abs());
                let near = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
                if *exponent >= 0.0 {
                    coef.abs() * far.powf(*exponent)
                } else if near == 0.0 {
                    f64::INFINITY
                } else {
                    coef.abs() * near.powf(*exponent)
                }
            }
        }
    }
}

/// `∫_a^b |x|^q dx` for `a < b`.
pub fn abs_power_integral(a: f64, b: f64, q: f64) -> Result<f64> {
    if a >= 0.0 {
        half_line_power(a, b, q)
    } else if b <= 0.0 {
        half_line_power(-b, -a, q)
    } else {
        Ok(half_line_power(0.0, -a, q)? + half_line_power(0.0, b, q)?)
    }
}

fn half_line_power(a: f64, b: f64, q: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a == 0.0 && q <= -1.0 {
        return Err(Error::NotIntegrable(format!("|x|^{q} near the origin")));
    }
    if q == -1.0 {
        Ok((b / a).ln())
    } else if a.is_infinite() || b.is_infinite() {
        if q < -1.0 {
            Ok((b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0))
        } else {
            Err(Error::NotIntegrable(format!("|x|^{q} at infinity")))
        }
    } else {
        Ok((b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0))
    }
}

fn poly_pow(c: &[f64], power: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..power {
        let mut next = vec![0.0; out.len() + c.len() - 1];
        for (i, a) in out.iter().enumerate() {
            for (j, b) in c.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        out = next;
    }
    out
}

fn poly_antiderivative_eval(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, ck)| acc * x + ck / (k as f64 + 1.0))
        * x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub formula: Formula,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, formula: Formula) -> Self {
        Piece { lo, hi, formula }
    }
}

/// A function of one variable given by formulas on sorted, non-overlapping intervals and zero
/// elsewhere. A point shared by two adjacent intervals takes the value of the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piecewise1D {
    pub pieces: Vec<Piece>,
}

impl Piecewise1D {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let pw = Piecewise1D { pieces };
        pw.validate()?;
        Ok(pw)
    }

    /// The constant `1` on the whole line.
    pub fn one() -> Self {
        Self::constant_on(f64::NEG_INFINITY, f64::INFINITY, 1.0)
    }

    pub fn constant_on(lo: f64, hi: f64, c: f64) -> Self {
        Piecewise1D { pieces: vec![Piece::new(lo, hi, Formula::constant(c))] }
    }

    pub fn validate(&self) -> Result<()> {
        for piece in &self.pieces {
            if piece.lo.is_nan() || piece.hi.is_nan() || piece.lo >= piece.hi {
                return Err(Error::invalid(format!("piece interval [{}, {}] is empty", piece.lo, piece.hi)));
            }
            piece.formula.validate()?;
        }
        if self.pieces.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::invalid("pieces must be sorted and non-overlapping"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.lo <= x && x <= p.hi)
            .map_or(0.0, |p| p.formula.eval(x))
    }

    fn overlaps(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, &Formula)> {
        self.pieces.iter().filter_map(move |p| {
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            (lo < hi).then_some((lo, hi, &p.formula))
        })
    }

    pub fn abs_p_integral(&self, a: f64, b: f64, p: f64) -> Result<f64> {
        let mut terms = Vec::new();
        for (lo, hi, f) in self.overlaps(a, b) {
            terms.push(f.abs_p_integral(lo, hi, p)?);
        }
        Ok(crate::numeric::pairwise_sum(&terms))
    }

    pub fn signed_integral(&self, a: f64, b: f64) -> Result<f64> {
        let mut terms = Vec::new();
        for (lo, hi, f) in self.overlaps(a, b) {
            terms.push(f.signed_integral(lo, hi)?);
        }
        Ok(crate::numeric::pairwise_sum(&terms))
    }

    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        self.overlaps(a, b).map(|(lo, hi, f)| f.sup_abs(lo, hi)).fold(0.0, f64::max)
    }

    /// Interval ends and power singularities strictly inside `(a, b)`.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            out.push(piece.lo);
            out.push(piece.hi);
            if matches!(piece.formula, Formula::Power { .. }) {
                out.push(0.0);
            }
        }
        out.retain(|x| *x > a && *x < b);
        out
    }

    /// Breakpoints inside `(a, b)` when every piece meeting `[a, b]` is constant.
    pub fn constant_breakpoints(&self, a: f64, b: f64) -> Option<Vec<f64>> {
        for (_, _, f) in self.overlaps(a, b) {
            f.as_constant()?;
        }
        let mut out: Vec<f64> = self.pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
        out.retain(|x| *x > a && *x < b);
        Some(out)
    }

    /// Largest `|x|` in the closure of the support, if bounded.
    pub fn support_extent(&self) -> Option<f64> {
        self.pieces
            .iter()
            .filter(|p| p.formula.as_constant() != Some(0.0))
            .map(|p| p.lo.abs().max(p.hi.abs()))
            .try_fold(0.0f64, |acc, e| e.is_finite().then_some(acc.max(e)))
    }

    /// True when every piece is provably nonnegative (constants, nonnegative power pieces, and
    /// linear pieces nonnegative at both ends); `false` is inconclusive.
    pub fn is_nonnegative(&self) -> bool {
        self.pieces.iter().all(|p| match &p.formula {
            Formula::Power { coef, .. } => *coef >= 0.0,
            Formula::Poly { coeffs } => match coeffs.len() {
                0 => true,
                1 => coeffs[0] >= 0.0,
                2 => {
                    let end_ok = |x: f64, dir: f64| {
                        if x.is_finite() {
                            coeffs[0] + coeffs[1] * x >= 0.0
                        } else {
                            coeffs[1] * dir >= 0.0
                        }
                    };
                    end_ok(p.lo, -1.0) && end_ok(p.hi, 1.0)
                }
                _ => false,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_abs_integral_crosses_root() {
        // |x| on [-1, 2] for p = 1 is 1/2 + 2.
        let f = Formula::linear(0.0, 1.0);
        assert!((f.abs_p_integral(-1.0, 2.0, 1.0).unwrap() - 2.5).abs() < 1e-15);
        // |1 - x|^2 on [0, 3] = ∫_0^3 (1-x)^2 = 3.
        let g = Formula::linear(1.0, -1.0);
        assert!((g.abs_p_integral(0.0, 3.0, 2.0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_needs_oracle_for_odd_p() {
        let f = Formula::Poly { coeffs: vec![0.0, 0.0, 1.0] };
        assert!(matches!(f.abs_p_integral(0.0, 1.0, 1.0), Err(Error::NeedsOracle(_))));
        // ∫_0^1 (x^2)^2 = 1/5.
        assert!((f.abs_p_integral(0.0, 1.0, 2.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn power_integrals() {
        let f = Formula::Power { coef: 1.0, exponent: -2.0 };
        assert!((f.abs_p_integral(1.0, 4.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(f.abs_p_integral(-1.0, 1.0, 1.0), Err(Error::NotIntegrable(_))));
        let g = Formula::Power { coef: 1.0, exponent: -1.0 };
        assert!((g.abs_p_integral(1.0, std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let bad = Piecewise1D::new(vec![
            Piece::new(0.0, 2.0, Formula::constant(1.0)),
            Piece::new(1.0, 3.0, Formula::constant(1.0)),
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn shared_endpoint_takes_first_piece() {
        let pw = Piecewise1D::new(vec![
            Piece::new(0.0, 1.0, Formula::constant(1.0)),
            Piece::new(1.0, 2.0, Formula::constant(5.0)),
        ])
        .unwrap();
        assert_eq!(pw.eval(1.0), 1.0);
        assert_eq!(pw.eval(1.5), 5.0);
        assert_eq!(pw.eval(2.5), 0.0);
    }
}
