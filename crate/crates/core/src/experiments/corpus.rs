use serde::Serialize;

use crate::funcs::{Formula, FunctionSpec, Piece, Piecewise1D};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusMember {
    pub id: String,
    pub function: FunctionSpec,
}

fn member(id: &str, function: FunctionSpec) -> CorpusMember {
    CorpusMember { id: id.to_string(), function }
}

fn pw(pieces: Vec<(f64, f64, Formula)>) -> Piecewise1D {
    Piecewise1D::new(pieces.into_iter().map(|(a, b, f)| Piece::new(a, b, f)).collect()).expect("corpus piece")
}

fn steps() -> Piecewise1D {
    pw(vec![
        (-3.0, -0.5, Formula::constant(1.5)),
        (-0.5, 2.0, Formula::constant(0.5)),
        (2.0, 4.0, Formula::constant(-1.0)),
    ])
}

fn ramp() -> Piecewise1D {
    pw(vec![(-2.0, 2.0, Formula::linear(1.0, 0.5))])
}

fn two_sided_tail(exponent: f64) -> Piecewise1D {
    let f = Formula::Power { coef: 1.0, exponent };
    pw(vec![(f64::NEG_INFINITY, -1.0, f.clone()), (1.0, f64::INFINITY, f)])
}

/// The ten test functions of dimension `n` (1 or 2): constants, indicators, tensor pieces,
/// a combination, the truncated staircase (`n = 2`) and power tails. The first member is
/// `f₀ ≡ 1`.
pub fn corpus(n: usize) -> Vec<CorpusMember> {
    match n {
        1 => vec![
            member("one", FunctionSpec::constant(1.0, 1)),
            member("constant_neg", FunctionSpec::constant(-2.5, 1)),
            member("unit_indicator", FunctionSpec::cube_indicator(1, 1.0)),
            member("half_line", FunctionSpec::half_space(0, 1)),
            member("steps", FunctionSpec::tensor(vec![steps()])),
            member("ramp", FunctionSpec::tensor(vec![ramp()])),
            member(
                "combo",
                FunctionSpec::combo(vec![
                    (2.0, FunctionSpec::cube_indicator(1, 1.0)),
                    (-1.0, FunctionSpec::tensor(vec![Piecewise1D::constant_on(0.5, 3.0, 1.0)])),
                ]),
            ),
            member("scaled_steps", FunctionSpec::tensor(vec![steps()]).scaled(vec![0.5])),
            member("power_tail", FunctionSpec::RadialPowerTail { exponent: -0.75, dim: 1 }),
            member(
                "ramp_with_tail",
                FunctionSpec::tensor(vec![pw(vec![
                    (-1.0, 1.0, Formula::Poly { coeffs: vec![1.0, 0.0, -0.5] }),
                    (1.0, f64::INFINITY, Formula::Power { coef: 0.5, exponent: -1.5 }),
                ])]),
            ),
        ],
        2 => vec![
            member("one", FunctionSpec::constant(1.0, 2)),
            member("constant_neg", FunctionSpec::constant(-2.5, 2)),
            member("unit_square", FunctionSpec::cube_indicator(2, 1.0)),
            member("half_plane", FunctionSpec::half_space(0, 2)),
            member("steps", FunctionSpec::tensor(vec![steps(), Piecewise1D::constant_on(-1.0, 4.0, 1.0)])),
            member("ramp", FunctionSpec::tensor(vec![ramp(), Piecewise1D::constant_on(-1.0, 1.0, 1.0)])),
            member("staircase_8", FunctionSpec::StaircaseCross { p_root: 1.0, max_band: Some(8) }),
            member(
                "combo",
                FunctionSpec::combo(vec![
                    (1.0, FunctionSpec::cube_indicator(2, 1.0).scaled(vec![0.5, 0.25])),
                    (-0.5, FunctionSpec::half_space(1, 2)),
                ]),
            ),
            member("radial_tail", FunctionSpec::RadialPowerTail { exponent: -2.5, dim: 2 }),
            member("tensor_tail", FunctionSpec::tensor(vec![two_sided_tail(-0.75), two_sided_tail(-0.5)])),
        ],
        _ => Vec::new(),
    }
}
