use super::*;
use crate::operators::{ContinuousWeight, DiscreteWeight, GridWeight};

/// `‖H f_ε‖_2 / ‖f_ε‖_2` for the classical average and `f_ε = |x|^{-1/2-ε} χ_{|x|>1}`, from
/// `H f_ε(x) = (x^{-a} - x^{-1}) / (1 - a)` on `x > 1`, `a = 1/2 + ε`.
fn hardy_ratio_p2(eps: f64) -> f64 {
    let a = 0.5 + eps;
    let b = 0.5 - eps;
    ((1.0 - 4.0 * eps / a + 2.0 * eps) / (b * b)).sqrt()
}

#[test]
fn discrete_lp_formula_is_one_third() {
    let w = WeightSpec::Discrete(DiscreteWeight::geometric(0.5, 1.0, 0.125));
    let f = opnorm_formula(OpKind::DiscreteLp, &w, 1.0, 1).unwrap();
    assert!(f.bounded);
    assert!((f.value - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn discrete_lp_ratio_inside_bracket() {
    let w = DiscreteWeight::geometric(0.5, 1.0, 0.125);
    for eps in [0.2, 0.1, 0.05] {
        let r = discrete_lp_ratio(&w, 1.0, eps, 1e-13).unwrap();
        let q = 2f64.powf(1.0 + eps) / 8.0;
        let lower = eps.powf(eps) * q / (1.0 - q);
        assert!(r.value + r.truncation >= lower - r.quad_error, "eps={eps}: {r:?}");
        assert!(r.value <= 1.0 / 3.0 + 1e-12, "eps={eps}: {r:?}");
    }
}

#[test]
fn continuous_lp_ratio_matches_hardy_closed_form() {
    let w = ContinuousWeight::Constant { c: 1.0, dim: 1 };
    for eps in [0.2, 0.05, 0.02] {
        let r = continuous_lp_ratio(&w, 2.0, eps, 1e-12).unwrap();
        let exact = hardy_ratio_p2(eps);
        assert!((r.value - exact).abs() <= r.quad_error + r.truncation + 1e-9, "eps={eps}: {r:?} vs {exact}");
    }
    assert!(hardy_ratio_p2(0.02) > 1.96);
}

#[test]
fn divergent_weight_is_unbounded() {
    let w = WeightSpec::Discrete(DiscreteWeight::geometric(0.5, 1.0, 1.0));
    let f = opnorm_formula(OpKind::DiscreteLp, &w, 2.0, 1).unwrap();
    assert!(!f.bounded);
    assert_eq!(f.value, f64::INFINITY);
}

#[test]
fn continuous_bp_formula_is_mass() {
    let w = WeightSpec::Continuous(ContinuousWeight::Constant { c: 1.0, dim: 2 });
    let f = opnorm_formula(OpKind::ContinuousBp, &w, 1.0, 2).unwrap();
    assert!((f.value - 1.0).abs() < 1e-15);
    assert!(opnorm_formula(OpKind::ContinuousBp, &w, 1.0, 1).is_err());
    assert!(opnorm_formula(OpKind::GridBp, &w, 1.0, 2).is_err());
}

#[test]
fn diagonal_grid_reduces_to_discrete_series() {
    // Identical contractions on both axes: the grid L^p series with per-axis exponent -1/p
    // equals the one-dimensional series with exponent -n/p.
    let (rho, theta, p) = (0.5, 0.1, 2.0);
    let grid = WeightSpec::Grid(GridWeight::Diagonal { rho: vec![rho; 2], scale: 1.0, theta });
    let disc = WeightSpec::Discrete(DiscreteWeight::geometric(rho, 1.0, theta));
    let g = opnorm_formula(OpKind::GridLp, &grid, p, 2).unwrap();
    let d = opnorm_formula(OpKind::DiscreteLp, &disc, p, 2).unwrap();
    assert!((g.value - d.value).abs() <= 1e-14 * d.value, "{g:?} vs {d:?}");
}

#[test]
fn inclusion_gap_rect_rows() {
    let cfg = ExperimentConfig { m_max: Some(8), ..Default::default() };
    let rep = run_named("inclusion_gap", &cfg).unwrap();
    assert!(rep.pass, "{:?}", rep.failed_rows().collect::<Vec<_>>());
    let row = rep.rows.iter().find(|r| r.case == "rect_exact" && r.param == "p=1,m=8").unwrap();
    assert_eq!(row.empirical, 4.5);
    let ests: Vec<f64> = rep.rows.iter().filter(|r| r.case == "rect_exact").map(|r| r.empirical).collect();
    assert!(ests.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn unknown_experiment_is_invalid() {
    assert!(matches!(run_named("nope", &ExperimentConfig::default()), Err(crate::Error::InvalidParameter(_))));
}

#[test]
fn config_rejects_unknown_fields() {
    assert!(serde_json::from_str::<ExperimentConfig>(r#"{"m_max": 8}"#).is_ok());
    assert!(serde_json::from_str::<ExperimentConfig>(r#"{"m_maxx": 8}"#).is_err());
}

#[test]
fn report_output_is_deterministic() {
    let cfg = ExperimentConfig { m_max: Some(4), ..Default::default() };
    let dir = tempfile::tempdir().unwrap();
    let a = run_named("inclusion_gap", &cfg).unwrap();
    let b = run_named("inclusion_gap", &cfg).unwrap();
    let pa = write_report(&dir.path().join("a"), &a).unwrap();
    let pb = write_report(&dir.path().join("b"), &b).unwrap();
    for file in ["rows.csv", "summary.json"] {
        assert_eq!(std::fs::read(pa.join(file)).unwrap(), std::fs::read(pb.join(file)).unwrap());
    }
    let csv = std::fs::read_to_string(pa.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
}
