use approx::assert_relative_eq;

use super::*;
use crate::field::Field;
use crate::funcs::{FunctionSpec, Piecewise1D, Rect};

fn rect(h: &[f64]) -> Rect {
    Rect::new(h.to_vec()).unwrap()
}

#[test]
fn rect_avg_examples() {
    let c = FunctionSpec::constant(2.0, 2);
    assert_relative_eq!(rect_avg_p(&c, 2.0, &rect(&[1.0, 3.0]), Convention::Literal).unwrap().value, 4.0, max_relative = 1e-14);
    let s = FunctionSpec::staircase(1.0);
    assert_eq!(rect_avg_p(&s, 1.0, &rect(&[1.0, 2.0]), Convention::Literal).unwrap().value, 6.0);
    assert_eq!(rect_avg_p(&s, 1.0, &rect(&[1.0, 2.0]), Convention::Volume).unwrap().value, 1.5);
    let z = FunctionSpec::constant(0.0, 3);
    assert_eq!(rect_avg_p(&z, 1.5, &rect(&[1.0, 2.0, 5.0]), Convention::Volume).unwrap().value, 0.0);
}

#[test]
fn conventions_differ_by_two_to_n_over_p() {
    let f = FunctionSpec::tensor(vec![Piecewise1D::constant_on(-0.5, 3.0, 2.0), Piecewise1D::constant_on(-2.0, 1.0, 1.5)]);
    for p in [1.0, 2.0, 3.0] {
        let vol = bp_rect_norm(&f, &NormParams::new(p)).unwrap().value;
        let lit = bp_rect_norm(&f, &NormParams::new(p).with_convention(Convention::Literal)).unwrap().value;
        assert_relative_eq!(lit, 2f64.powf(2.0 / p) * vol, max_relative = 1e-13);
    }
}

#[test]
fn bp_rect_examples() {
    for n in 1..=3 {
        let one = FunctionSpec::constant(1.0, n);
        let lit = bp_rect_norm(&one, &NormParams::new(1.0).with_j_max(3).with_convention(Convention::Literal)).unwrap();
        assert_relative_eq!(lit.value, 2f64.powi(n as i32), max_relative = 1e-14);
        let vol = bp_rect_norm(&one, &NormParams::new(1.0).with_j_max(3)).unwrap();
        assert_relative_eq!(vol.value, 1.0, max_relative = 1e-14);
        assert!(vol.converged);
        assert_eq!(vol.attained, Attained::Rect(vec![1.0; n]));
    }
    let h = FunctionSpec::half_space(0, 2);
    let e = bp_rect_norm(&h, &NormParams::new(1.0)).unwrap();
    assert_relative_eq!(e.value, 0.5, max_relative = 1e-14);
}

#[test]
fn staircase_rect_norm_diverges() {
    let s = FunctionSpec::staircase(1.0);
    let e = bp_rect_norm(&s, &NormParams::new(1.0).with_j_max(6)).unwrap();
    assert!(!e.converged);
    assert_eq!(e.value, 32.5);
    assert_eq!(e.attained, Attained::Rect(vec![1.0, 64.0]));
    assert!(e.note.contains("factor 1.9"), "{}", e.note);
}

#[test]
fn dyadic_examples() {
    let one = FunctionSpec::constant(1.0, 1);
    let e = bp_dyadic_norm(&one, &NormParams::new(1.0)).unwrap();
    assert_eq!(e.value, 2.0);
    assert_eq!(e.attained, Attained::Dyadic(vec![0]));
    assert!(e.converged);
    let s = FunctionSpec::staircase(1.0);
    let shell = dyadic_shell_integral(&s, 1.0, &[0, 3], Variant::Inhomogeneous).unwrap();
    assert_eq!(shell.value * 2f64.powi(-3), 13.0);
    let cube = FunctionSpec::cube_indicator(2, 1.0);
    let e = bp_dyadic_norm(&cube, &NormParams::new(2.0)).unwrap();
    assert_eq!(e.attained, Attained::Dyadic(vec![0, 0]));
    assert_eq!(e.value, 2.0);
}

#[test]
fn shell_decomposition_sums_to_rectangle() {
    let f = FunctionSpec::tensor(vec![Piecewise1D::constant_on(-3.0, 5.0, 1.0), Piecewise1D::constant_on(-9.0, 2.5, 2.0)]);
    let mut total = 0.0;
    for j1 in 0..=3 {
        for j2 in 0..=3 {
            total += dyadic_shell_integral(&f, 1.0, &[j1, j2], Variant::Inhomogeneous).unwrap().value;
        }
    }
    let whole = f.integral_abs_p(&rect(&[8.0, 8.0]), 1.0).unwrap().value;
    assert_relative_eq!(total, whole, max_relative = 1e-13);
}

#[test]
fn sandwich_chain_constant_is_below_four() {
    for n in 1..=3 {
        for p in [1.0, 2.0] {
            let c = sandwich_chain_constant(n, p, 12);
            assert!(c < 4f64.powf(n as f64 / p));
            assert!(c > 0.99 * 4f64.powf(n as f64 / p));
        }
    }
    assert_eq!(sandwich_chain_constant(1, 1.0, 1), 3.0);
}

#[test]
fn ball_examples() {
    let c = FunctionSpec::constant(2.5, 2);
    let e = bp_ball_norm(&c, &NormParams::new(1.0).with_j_max(3)).unwrap();
    assert!((e.value - 2.5).abs() <= e.error_bound + 1e-12);
    let h = FunctionSpec::half_space(1, 2);
    let e = bp_ball_norm(&h, &NormParams::new(1.0).with_j_max(3)).unwrap();
    assert!((e.value - 0.5).abs() <= e.error_bound + 1e-12);
    let one = FunctionSpec::constant(3.0, 1);
    let e = bp_ball_norm(&one, &NormParams::new(2.0).with_j_max(3)).unwrap();
    assert_relative_eq!(e.value, 3.0, max_relative = 1e-14);
    assert_eq!(e.error_bound, 0.0);
}

#[test]
fn staircase_ball_norm_is_bounded() {
    let s = FunctionSpec::staircase(1.0);
    let e = bp_ball_norm(&s, &NormParams::new(1.0).with_j_max(5)).unwrap();
    assert!(e.value + e.error_bound <= 6.0);
}

#[test]
fn cmo_examples() {
    let c = FunctionSpec::constant(5.0, 2);
    assert_eq!(cmo_norm(&c, &NormParams::new(1.0)).unwrap().value, 0.0);
    assert_eq!(cmo_star_norm(&c, &NormParams::new(1.0)).unwrap().value, 0.0);
    let h = FunctionSpec::half_space(0, 2);
    assert_relative_eq!(cmo_norm(&h, &NormParams::new(1.0)).unwrap().value, 0.5, max_relative = 1e-14);
    assert_relative_eq!(cmo_star_norm(&h, &NormParams::new(1.0)).unwrap().value, 0.5, max_relative = 1e-14);
    assert_relative_eq!(cmo_norm(&h, &NormParams::new(2.0)).unwrap().value, 0.5, max_relative = 1e-14);
}

#[test]
fn cmo_star_general_p_uses_search() {
    let h = FunctionSpec::half_space(0, 1);
    // inf_a ((1-a)^3 + a^3)/2 sits at a = 1/2.
    let osc = rect_oscillation(&h, 3.0, &rect(&[1.0]), Convention::Volume).unwrap();
    assert!((osc.star_shift - 0.5).abs() < 1e-9);
    assert_relative_eq!(osc.star.value, 0.5, max_relative = 1e-9);
    let skew = FunctionSpec::tensor(vec![Piecewise1D::constant_on(-1.0, 0.5, 1.0)]);
    let osc = rect_oscillation(&skew, 1.5, &rect(&[1.0]), Convention::Volume).unwrap();
    assert!(osc.star.value <= osc.plain.value);
    assert!(osc.plain.value <= 2.0 * osc.star.value);
}

#[test]
fn herz_examples() {
    let ball = FunctionSpec::tensor(vec![Piecewise1D::constant_on(-1.0, 1.0, 1.0)]);
    for p in [1.0, 2.0] {
        let hp = HerzParams { alpha: 0.7, q: Exponent::Infinite, k_max: 5 };
        let e = herz_norm(&ball, &NormParams::new(p), &hp).unwrap();
        assert_relative_eq!(e.value, 2f64.powf(1.0 / p), max_relative = 1e-14);
        assert_eq!(e.attained, Attained::Shell(0));
    }
    let zero = FunctionSpec::constant(0.0, 2);
    let hp = HerzParams { alpha: 0.0, q: Exponent::Finite(2.0), k_max: 3 };
    assert_eq!(herz_norm(&zero, &NormParams::new(1.0), &hp).unwrap().value, 0.0);
    let one = FunctionSpec::constant(1.0, 1);
    let hp = HerzParams { alpha: -1.0, q: Exponent::Infinite, k_max: 6 };
    let e = herz_norm(&one, &NormParams::new(1.0), &hp).unwrap();
    assert_eq!(e.value, 2.0);
    assert_eq!(e.attained, Attained::Shell(0));
}

#[test]
fn herz_q_serde() {
    let hp: HerzParams = serde_json::from_str(r#"{"alpha": -0.5, "q": "inf"}"#).unwrap();
    assert_eq!(hp.q, Exponent::Infinite);
    let hp: HerzParams = serde_json::from_str(r#"{"alpha": -0.5, "q": 2, "k_max": 3}"#).unwrap();
    assert_eq!(hp.q, Exponent::Finite(2.0));
    assert!(serde_json::from_str::<HerzParams>(r#"{"alpha": 0, "q": "two"}"#).is_err());
    assert_eq!(serde_json::to_string(&Exponent::Infinite).unwrap(), "\"inf\"");
}

#[test]
fn herz_and_ball_dominate_each_other() {
    let f = FunctionSpec::RadialPowerTail { exponent: -1.2, dim: 2 };
    for p in [1.0, 2.0] {
        let params = NormParams::new(p).with_j_max(4);
        let ball = bp_ball_norm(&f, &params).unwrap();
        let hp = HerzParams { alpha: -1.0 / p, q: Exponent::Infinite, k_max: 4 };
        let herz = herz_norm(&f, &params, &hp).unwrap();
        let slack = ball.error_bound + herz.error_bound;
        assert!(herz.value <= herz_ball_ratio_bound(2, p) * ball.value + slack);
        assert!(ball.value <= ball_herz_ratio_bound(2, p) * herz.value + slack);
    }
}

#[test]
fn homogeneous_variant_reaches_small_rectangles() {
    let f = FunctionSpec::tensor(vec![Piecewise1D::constant_on(-0.25, 0.25, 4.0)]);
    let inh = bp_rect_norm(&f, &NormParams::new(1.0)).unwrap();
    let hom = bp_rect_norm(&f, &NormParams::new(1.0).homogeneous(20)).unwrap();
    assert_relative_eq!(inh.value, 1.0, max_relative = 1e-14);
    assert_relative_eq!(hom.value, 4.0, max_relative = 1e-14);
}

#[test]
fn params_reject_bad_exponent() {
    let f = FunctionSpec::constant(1.0, 1);
    assert!(matches!(bp_rect_norm(&f, &NormParams::new(0.5)), Err(crate::Error::InvalidParameter(_))));
    let p: NormParams = serde_json::from_str(r#"{"p": 2, "variant": {"kind": "homogeneous"}}"#).unwrap();
    assert_eq!(p.variant, Variant::Homogeneous { j_min: 20 });
    assert!(serde_json::from_str::<NormParams>(r#"{"p": 2, "jmax": 3}"#).is_err());
}
