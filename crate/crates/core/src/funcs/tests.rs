use super::*;

fn rect(h: &[f64]) -> Rect {
    Rect::new(h.to_vec()).unwrap()
}

#[test]
fn evaluate_examples() {
    assert_eq!(FunctionSpec::constant(1.0, 2).evaluate(&[3.7, -2.0]).unwrap(), 1.0);
    assert_eq!(FunctionSpec::staircase(1.0).evaluate(&[0.5, 1.5]).unwrap(), 2.0);
    let tail = FunctionSpec::RadialPowerTail { exponent: -1.5, dim: 1 };
    assert_eq!(tail.evaluate(&[0.5]).unwrap(), 0.0);
}

#[test]
fn evaluate_rejects_wrong_dimension() {
    let f = FunctionSpec::constant(1.0, 2);
    assert!(matches!(f.evaluate(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
}

#[test]
fn staircase_band_values() {
    let f = FunctionSpec::staircase(2.0);
    for k in 2..12u32 {
        let x = k as f64 - 0.25;
        let expected = (k as f64).powf(0.5);
        assert_eq!(f.evaluate(&[0.3, -x]).unwrap(), expected);
        assert_eq!(f.evaluate(&[x, 1.0]).unwrap(), expected);
        // Band edge k belongs to band k.
        assert_eq!(f.evaluate(&[-(k as f64), 0.0]).unwrap(), expected);
    }
    assert_eq!(f.evaluate(&[1.5, 1.5]).unwrap(), 0.0);
    assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), 1.0);
}

#[test]
fn axis_scaled_evaluates_through_inner() {
    let inner = FunctionSpec::staircase(1.0);
    let f = inner.clone().scaled(vec![0.5, 0.25]);
    for x in [[3.0, 0.3], [1.1, 7.9], [-5.0, 2.0]] {
        let y = [0.5 * x[0], 0.25 * x[1]];
        assert_eq!(f.evaluate(&x).unwrap().to_bits(), inner.evaluate(&y).unwrap().to_bits());
    }
}

#[test]
fn staircase_rect_integrals() {
    let f = FunctionSpec::staircase(1.0);
    assert_eq!(rect_integral_abs_p(&f, 1.0, &rect(&[1.0, 2.0])).unwrap().value, 12.0);
    assert_eq!(rect_integral_abs_p(&f, 1.0, &rect(&[2.0, 2.0])).unwrap().value, 20.0);
    // (m+1)/2 volume average on [-1,1]×[-m,m].
    for m in [2.0, 7.0, 64.0] {
        let v = rect_integral_abs_p(&f, 1.0, &rect(&[1.0, m])).unwrap().value;
        assert_eq!(v / (4.0 * m), (m + 1.0) / 2.0);
    }
}

#[test]
fn constant_rect_integral() {
    let f = FunctionSpec::constant(2.0, 2);
    assert_eq!(rect_integral_abs_p(&f, 2.0, &rect(&[1.0, 3.0])).unwrap().value, 48.0);
}

#[test]
fn radial_tail_one_dim() {
    let f = FunctionSpec::RadialPowerTail { exponent: -2.0, dim: 1 };
    let v = rect_integral_abs_p(&f, 1.0, &rect(&[4.0])).unwrap();
    assert!(v.is_exact());
    assert!((v.value - 1.5).abs() < 1e-15);
}

#[test]
fn radial_tail_two_dim_matches_polar_oracle() {
    // Over a disk-containing square the integral of |x|^{-3} outside the unit disk is
    // 2π(1 - 1/R) on the disk of radius R plus the corner remainder; check the polar part
    // by a square of half-width 1 (integral 0) and monotonicity in the rectangle.
    let f = FunctionSpec::RadialPowerTail { exponent: -3.0, dim: 2 };
    let inner = rect_integral_abs_p(&f, 1.0, &rect(&[0.7, 0.7])).unwrap();
    assert_eq!(inner.value, 0.0);
    let small = rect_integral_abs_p(&f, 1.0, &rect(&[2.0, 2.0])).unwrap();
    let big = rect_integral_abs_p(&f, 1.0, &rect(&[4.0, 4.0])).unwrap();
    assert!(small.value < big.value);
    // Independent polar oracle for the disk of radius 2: ∫_1^2 r^{-3} 2π r dr = π.
    // The square [-2,2]² contains that disk, and the excess is the corner region.
    let corner = {
        let g = |x: &[f64]| {
            let r2: f64 = x[0] * x[0] + x[1] * x[1];
            if r2 > 4.0 {
                r2.powf(-1.5)
            } else {
                0.0
            }
        };
        let b = |axis: usize, fixed: &[f64], _: f64, _: f64| {
            if axis == 1 {
                vec![(4.0 - fixed[0] * fixed[0]).max(0.0).sqrt()]
            } else {
                vec![]
            }
        };
        4.0 * crate::quad::integrate_box(&g, &[0.0, 0.0], &[2.0, 2.0], &b, crate::quad::QuadTol::new(1e-13, 1e-12))
            .unwrap()
            .value
    };
    assert!((small.value - (std::f64::consts::PI + corner)).abs() < 1e-9, "{} vs {}", small.value, corner);
}

#[test]
fn indicator_and_scaled_and_combo() {
    let h = FunctionSpec::half_space(1, 2);
    assert_eq!(rect_integral_abs_p(&h, 3.0, &rect(&[1.0, 2.0])).unwrap().value, 4.0);
    let scaled = FunctionSpec::cube_indicator(2, 1.0).scaled(vec![0.5, 1.0]);
    // χ_{[-2,2]×[-1,1]} on [-3,3]×[-3,3].
    assert_eq!(rect_integral_abs_p(&scaled, 1.0, &rect(&[3.0, 3.0])).unwrap().value, 8.0);
    let combo = FunctionSpec::combo(vec![(2.0, FunctionSpec::cube_indicator(1, 1.0)), (-1.0, FunctionSpec::half_space(0, 1))]);
    // 2χ[-1,1] - χ{x>0} on [-2,2]: values 0 on (-2,-1), 2 on (-1,0), 1 on (0,1), -1 on (1,2).
    let v = rect_integral_abs_p(&combo, 2.0, &rect(&[2.0])).unwrap();
    assert!(v.is_exact());
    assert_eq!(v.value, 4.0 + 1.0 + 1.0);
}

#[test]
fn non_constant_combo_needs_oracle() {
    let tent = FunctionSpec::tensor(vec![Piecewise1D::new(vec![Piece::new(-1.0, 1.0, Formula::linear(1.0, 0.5))]).unwrap()]);
    let combo = FunctionSpec::combo(vec![(1.0, tent.clone()), (1.0, FunctionSpec::half_space(0, 1))]);
    assert!(matches!(rect_integral_abs_p(&combo, 1.0, &rect(&[1.0])), Err(Error::NeedsOracle(_))));
    // Single-term combinations are exact.
    let single = FunctionSpec::combo(vec![(-2.0, tent)]);
    let v = rect_integral_abs_p(&single, 1.0, &rect(&[1.0])).unwrap();
    assert!((v.value - 4.0).abs() < 1e-15);
}

#[test]
fn scaling_identity() {
    let f = FunctionSpec::staircase(1.0);
    let t = [0.5, 0.25];
    let r = rect(&[3.0, 5.0]);
    let lhs = rect_integral_abs_p(&f.clone().scaled(t.to_vec()), 1.0, &r).unwrap().value;
    let rhs = rect_integral_abs_p(&f, 1.0, &r.scaled(&t).unwrap()).unwrap().value / (t[0] * t[1]);
    assert_eq!(lhs, rhs);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(FunctionSpec::half_space(2, 2).dim().is_err());
    assert!(FunctionSpec::constant(1.0, 4).dim().is_err());
    assert!(FunctionSpec::constant(1.0, 1).scaled(vec![1.5]).dim().is_err());
    assert!(FunctionSpec::combo(vec![(1.0, FunctionSpec::constant(1.0, 1)), (1.0, FunctionSpec::constant(1.0, 2))]).dim().is_err());
    assert!(Rect::new(vec![1.0, 0.0]).is_err());
    assert!(rect_integral_abs_p(&FunctionSpec::constant(1.0, 1), 0.5, &rect(&[1.0])).is_err());
}

#[test]
fn json_round_trip_and_unknown_fields() {
    let f = FunctionSpec::combo(vec![(1.5, FunctionSpec::staircase(2.0).scaled(vec![0.5, 1.0]))]);
    let s = serde_json::to_string(&f).unwrap();
    let back: FunctionSpec = serde_json::from_str(&s).unwrap();
    assert_eq!(f, back);
    let bad = r#"{"kind":"constant","c":1.0,"dim":1,"extra":2}"#;
    assert!(serde_json::from_str::<FunctionSpec>(bad).is_err());
}

#[test]
fn tensor_terms_reproduce_values() {
    let s = FunctionSpec::StaircaseCross { p_root: 2.0, max_band: Some(5) };
    let c = FunctionSpec::combo(vec![(2.0, s.clone().scaled(vec![0.5, 0.25])), (-1.0, FunctionSpec::half_space(1, 2))]);
    for f in [&s, &c] {
        let terms = f.tensor_terms().unwrap();
        for x in [[0.3, 0.7], [0.2, 3.5], [-4.5, 0.1], [2.5, 2.5], [0.9, -7.3], [-11.0, 0.6]] {
            let v: f64 = terms.iter().map(|(k, fs)| k * fs.iter().zip(x).map(|(g, xi)| g.eval(xi)).product::<f64>()).sum();
            assert!((v - f.eval_unchecked(&x)).abs() < 1e-14, "{x:?}");
        }
    }
    assert!(FunctionSpec::staircase(1.0).tensor_terms().is_none());
}
