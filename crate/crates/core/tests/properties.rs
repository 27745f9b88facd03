use proptest::prelude::*;

use rectherz::norms::{bp_dyadic_norm, bp_rect_norm, cmo_norm, cmo_star_norm, Convention, NormParams};
use rectherz::operators::{apply_continuous, apply_discrete, apply_grid_discrete, ContinuousWeight, DiscreteWeight, GridWeight};
use rectherz::funcs::{Formula, Piece, Piecewise1D};
use rectherz::FunctionSpec;

const TOL: f64 = 1e-12;

/// Piecewise constant on consecutive half-integer intervals inside `[-4, 4]`.
fn steps_1d() -> impl Strategy<Value = Piecewise1D> {
    (-8i32..4, prop::collection::vec(-3.0f64..3.0, 1..5)).prop_map(|(start, values)| {
        let pieces = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let lo = (start + i as i32) as f64 / 2.0;
                Piece::new(lo, lo + 0.5, Formula::constant(*v))
            })
            .collect();
        Piecewise1D::new(pieces).unwrap()
    })
}

/// Piecewise linear with two pieces, to exercise kinks and sign changes.
fn ramp_1d() -> impl Strategy<Value = Piecewise1D> {
    (-3.0f64..0.0, 0.5f64..3.0, -2.0f64..2.0, -1.0f64..1.0).prop_map(|(lo, hi, c0, c1)| {
        Piecewise1D::new(vec![
            Piece::new(lo, 0.0, Formula::linear(c0, c1)),
            Piece::new(0.0, hi, Formula::linear(c0, -c1)),
        ])
        .unwrap()
    })
}

fn function(n: usize) -> impl Strategy<Value = FunctionSpec> {
    prop::collection::vec(prop_oneof![steps_1d(), ramp_1d()], n).prop_map(FunctionSpec::tensor)
}

fn step_function(n: usize) -> impl Strategy<Value = FunctionSpec> {
    prop::collection::vec(steps_1d(), n).prop_map(FunctionSpec::tensor)
}

fn params(p: f64) -> NormParams {
    let mut params = NormParams::new(p);
    params.j_max = 4;
    params.per_octave = 2;
    params
}

fn p_values() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0)]
}

fn nonneg(f: FunctionSpec, n: usize) -> FunctionSpec {
    // |g| ≤ 3 on the step functions, so g + 3 ≥ 0.
    FunctionSpec::combo(vec![(1.0, f), (3.0, FunctionSpec::constant(1.0, n))])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn homogeneity_is_exact_for_dyadic_factors(f in step_function(2), k in -3i32..4, neg in any::<bool>(), p in prop_oneof![Just(1.0), Just(2.0)]) {
        let lam = if neg { -(2f64.powi(k)) } else { 2f64.powi(k) };
        let a = bp_rect_norm(&FunctionSpec::combo(vec![(lam, f.clone())]), &params(p)).unwrap();
        let b = bp_rect_norm(&f, &params(p)).unwrap();
        prop_assert_eq!(a.value, lam.abs() * b.value);
    }

    #[test]
    fn homogeneity(f in function(1), lam in -5.0f64..5.0, p in p_values()) {
        let a = bp_rect_norm(&FunctionSpec::combo(vec![(lam, f.clone())]), &params(p)).unwrap();
        let b = bp_rect_norm(&f, &params(p)).unwrap();
        prop_assert!((a.value - lam.abs() * b.value).abs() <= 4.0 * f64::EPSILON * a.value.max(1e-300) + a.error_bound + b.error_bound * lam.abs());
    }

    #[test]
    fn triangle_inequality(f in function(2), g in function(2), p in p_values()) {
        let sum = FunctionSpec::combo(vec![(1.0, f.clone()), (1.0, g.clone())]);
        let s = bp_rect_norm(&sum, &params(p)).unwrap();
        let a = bp_rect_norm(&f, &params(p)).unwrap();
        let b = bp_rect_norm(&g, &params(p)).unwrap();
        prop_assert!(s.value <= a.value + b.value + 1e-12 + s.error_bound + a.error_bound + b.error_bound);
    }

    #[test]
    fn cmo_sandwich(f in function(1), p in p_values()) {
        let plain = cmo_norm(&f, &params(p)).unwrap();
        let star = cmo_star_norm(&f, &params(p)).unwrap();
        let slack = 1e-12 + plain.error_bound + star.error_bound;
        prop_assert!(star.value <= plain.value + slack, "{} > {}", star.value, plain.value);
        prop_assert!(plain.value <= 2.0 * star.value + slack, "{} > 2 * {}", plain.value, star.value);
    }

    #[test]
    fn cmo_ignores_constants(f in step_function(1), c in -4.0f64..4.0, p in p_values()) {
        let shifted = FunctionSpec::combo(vec![(1.0, f.clone()), (c, FunctionSpec::constant(1.0, 1))]);
        let a = cmo_norm(&shifted, &params(p)).unwrap();
        let b = cmo_norm(&f, &params(p)).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * (1.0 + b.value) + a.error_bound + b.error_bound);
    }

    #[test]
    fn dyadic_sandwich(f in step_function(1), p in p_values()) {
        let mut pr = params(p);
        pr.convention = Convention::Literal;
        let d = bp_dyadic_norm(&f, &pr).unwrap();
        let r = bp_rect_norm(&f, &pr).unwrap();
        prop_assert!(d.value <= r.value * (1.0 + 1e-12) + 1e-300);
        prop_assert!(r.value <= 4f64.powf(1.0 / p) * d.value * (1.0 + 1e-12));
    }

    #[test]
    fn discrete_linearity(f in function(1), g in function(1), a in -2.0f64..2.0, b in -2.0f64..2.0, x in -6.0f64..6.0) {
        let w = DiscreteWeight::geometric(0.5, 1.0, 0.5);
        let combo = FunctionSpec::combo(vec![(a, f.clone()), (b, g.clone())]);
        let lhs = apply_discrete(&combo, &w, &[x], TOL).unwrap();
        let tf = apply_discrete(&f, &w, &[x], TOL).unwrap();
        let tg = apply_discrete(&g, &w, &[x], TOL).unwrap();
        prop_assert!((lhs.value - (a * tf.value + b * tg.value)).abs() <= 2.0 * TOL + 1e-14);
    }

    #[test]
    fn continuous_linearity(f in function(2), g in function(2), a in -2.0f64..2.0, x in prop::array::uniform2(-5.0f64..5.0)) {
        let w = ContinuousWeight::SeparablePower { scale: 2.0, betas: vec![0.0, 1.0] };
        let combo = FunctionSpec::combo(vec![(a, f.clone()), (1.0, g.clone())]);
        let lhs = apply_continuous(&combo, &w, &x, TOL).unwrap();
        let tf = apply_continuous(&f, &w, &x, TOL).unwrap();
        let tg = apply_continuous(&g, &w, &x, TOL).unwrap();
        prop_assert!((lhs.value - (a * tf.value + tg.value)).abs() <= 2.0 * TOL + 1e-14);
    }

    #[test]
    fn positivity(f in step_function(2), x in prop::array::uniform2(-6.0f64..6.0)) {
        let g = nonneg(f, 2);
        let c = apply_continuous(&g, &ContinuousWeight::Constant { c: 1.0, dim: 2 }, &x, TOL).unwrap();
        prop_assert!(c.value >= -2.0 * TOL);
        let grid = GridWeight::Product { rho: vec![0.5, 0.25], scale: 1.0, theta: vec![0.5, 0.5] };
        let d = apply_grid_discrete(&g, &grid, &x, TOL).unwrap();
        prop_assert!(d.value >= -2.0 * TOL);
    }

    #[test]
    fn dilation_commutes(f in function(2), l0 in 0.05f64..=1.0, l1 in 0.05f64..=1.0, x in prop::array::uniform2(-5.0f64..5.0)) {
        let w = ContinuousWeight::SeparablePower { scale: 1.5, betas: vec![-0.5, 2.0] };
        let a = apply_continuous(&f.clone().scaled(vec![l0, l1]), &w, &x, TOL).unwrap();
        let b = apply_continuous(&f, &w, &[l0 * x[0], l1 * x[1]], TOL).unwrap();
        prop_assert!((a.value - b.value).abs() <= 2.0 * TOL, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn norms_are_deterministic(f in function(2), p in p_values()) {
        let a = bp_rect_norm(&f, &params(p)).unwrap();
        let b = bp_rect_norm(&f, &params(p)).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.error_bound.to_bits(), b.error_bound.to_bits());
    }
}
