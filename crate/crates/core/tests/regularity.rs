mod common;

use proptest::prelude::*;
use semiconv::fields::{CatalogId, FieldSpec};
use semiconv::geometry::ConvexBody;
use semiconv::modulus::scale_modulus;
use semiconv::regularity::{
    check_bound_zodh, check_directional_gap, check_envelope, check_semiconcave, check_semiconvex, check_semiconvex_on_lines,
    check_theorem_q, estimate_derivative_modulus, semiconvex_margin, CheckConfig,
};
use semiconv::witness::build_wedge_witness;
use semiconv::{Eta, Modulus, Norm, ScalarField};

fn cfg(count: usize) -> CheckConfig {
    CheckConfig::new(42, count)
}

#[test]
fn convex_square_is_semiconvex_with_zero_modulus() {
    let f = ScalarField::parse("x1^2", ConvexBody::open_box(&[-1.0], &[1.0]).unwrap()).unwrap();
    let r = check_semiconvex(&f, &Modulus::zero(), &cfg(10_000)).unwrap();
    assert!(r.pass);
    assert!(r.min_margin >= 0.0);
}

#[test]
fn half_product_on_strip() {
    let f = ScalarField::parse("x1*x2/2", ConvexBody::Strip).unwrap();
    let c = cfg(10_000).with_window(vec![[-100.0, 100.0], [0.0, 1.0]]);
    assert!(check_semiconvex(&f, &Modulus::sqrt(), &c).unwrap().pass);
    assert!(check_semiconcave(&f, &Modulus::sqrt(), &c).unwrap().pass);
}

#[test]
fn three_halves_power_is_not_semiconcave_with_small_multiple() {
    let f = ScalarField::parse("x1^1.5/1.5", ConvexBody::open_box(&[0.0], &[1.0]).unwrap()).unwrap();
    let m = Modulus::power(0.5, 1.0).unwrap();
    assert!(check_semiconvex(&f, &m, &cfg(10_000)).unwrap().pass);
    assert!(check_semiconcave(&f, &m, &cfg(10_000)).unwrap().pass);
    let small = scale_modulus(&m, 0.1).unwrap();
    let r = check_semiconcave(&f, &small, &cfg(10_000)).unwrap();
    assert!(!r.pass);
    assert!(r.witness.is_some());
}

#[test]
fn affine_fields_pass_everything() {
    let f = ScalarField::parse("3*x1 - 2*x2 + 7", common::unit_ball()).unwrap();
    let m = Modulus::power(0.3, 1e-6).unwrap();
    let env = check_envelope(&f, &m, &cfg(2000)).unwrap();
    assert!(env.pass && env.min_margin >= 0.0);
    let gap = check_directional_gap(&f, &Modulus::zero(), &cfg(2000)).unwrap();
    assert!(gap.pass);
    assert!(gap.min_margin.abs() < 1e-12);
    let est = estimate_derivative_modulus(&f, &cfg(500), None).unwrap();
    assert!(est.table.iter().all(|r| r[1] == 0.0));
}

#[test]
fn product_envelope_on_strip() {
    let f = ScalarField::parse("x1*x2", ConvexBody::Strip).unwrap();
    let c = cfg(10_000).with_window(vec![[-100.0, 100.0], [0.0, 1.0]]);
    assert!(check_envelope(&f, &Modulus::sqrt(), &c).unwrap().pass);
}

#[test]
fn saddle_envelope_with_half_slope() {
    let f = ScalarField::new(FieldSpec::catalog(CatalogId::Saddle, 2.0), common::unit_ball()).unwrap();
    assert!(check_envelope(&f, &Modulus::linear(1.0).unwrap(), &cfg(10_000)).unwrap().pass);
}

#[test]
fn square_gap_is_tight_for_slope_two() {
    let f = ScalarField::parse("x1^2", ConvexBody::open_box(&[-1.0], &[1.0]).unwrap()).unwrap();
    let r = check_directional_gap(&f, &Modulus::linear(2.0).unwrap(), &cfg(5000)).unwrap();
    assert!(r.pass);
    assert!(r.min_margin.abs() < 1e-12);
}

#[test]
fn logwedge_gap_with_witness_constant() {
    let w = build_wedge_witness(Eta::sqrt()).unwrap();
    let r = check_directional_gap(&w.field, &w.scaled_modulus().unwrap(), &cfg(10_000)).unwrap();
    assert!(r.pass, "{}", r.min_margin);
}

#[test]
fn product_gradient_ratio_against_identity_slope() {
    let f = ScalarField::parse("x1*x2", common::unit_ball()).unwrap();
    let est = estimate_derivative_modulus(&f, &cfg(5000), Some(&Modulus::linear(1.0).unwrap())).unwrap();
    assert!((est.sup_ratio.unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn zodh_examples() {
    let f = ScalarField::parse("x1*x2", ConvexBody::ball(vec![0.0, 0.0], 2.0, Norm::L2).unwrap()).unwrap();
    let m = Modulus::linear(0.5).unwrap();
    let r = check_bound_zodh(&f, &m, &[0.0, 0.0], 1.0, &[1.0, 0.0], &cfg(2000)).unwrap();
    assert!((r.min_margin - 1.0).abs() < 1e-12);
    let r = check_bound_zodh(&f, &m, &[0.0, 0.0], 1.0, &[0.0, 0.0], &cfg(2000)).unwrap();
    assert!((r.min_margin - 2.0 * 0.25).abs() < 1e-12);
    let saddle = ScalarField::new(FieldSpec::catalog(CatalogId::Saddle, 1.0), f.domain().clone()).unwrap();
    let r = check_bound_zodh(&saddle, &m, &[0.0, 0.0], 1.0, &[0.5, 0.0], &cfg(2000)).unwrap();
    assert!((r.details["lhs"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((r.details["rhs"].as_f64().unwrap() - 1.125).abs() < 1e-12);
}

#[test]
fn theorem_q_on_saddle_window_is_tight() {
    let f = ScalarField::new(FieldSpec::catalog(CatalogId::Saddle, 1.0), ConvexBody::whole_space(2).unwrap()).unwrap();
    let c = cfg(5000).with_window(vec![[-3.0, 3.0], [-3.0, 3.0]]);
    let r = check_theorem_q(&f, &Modulus::linear(0.5).unwrap(), &c).unwrap();
    assert!(r.pass);
    assert_eq!(r.details["bound"], serde_json::json!("lint: C=1"));
    assert!((r.details["lipschitz"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn equivalence_battery_holds() {
    let results = common::equivalence_battery(4000);
    for r in &results {
        assert!(r.holds, "{}: {}", r.field, r.label);
    }
    let vacuous: Vec<_> = results.iter().filter(|r| !r.hypothesis).map(|r| format!("{}: {}", r.field, r.label)).collect();
    println!("unsatisfied hypotheses: {vacuous:?}");
}

#[test]
fn line_restrictions_agree_with_full_check() {
    for e in common::catalog(3000) {
        for scale in [1.0, 0.05] {
            let m = scale_modulus(&e.modulus, scale).unwrap();
            let full = check_semiconvex(&e.field, &m, &e.cfg).unwrap().pass;
            let lines = check_semiconvex_on_lines(&e.field, &m, &e.cfg, 50).unwrap().pass;
            assert_eq!(full, lines, "{} scaled by {scale}", e.name);
        }
    }
}

#[test]
fn recession_probes_are_not_trivial() {
    let dims: Vec<usize> = common::random_polyhedra(7, 20)
        .iter()
        .map(|(g, _)| semiconv::geometry::recession_cone(g).unwrap().dimension())
        .collect();
    println!("recession dimensions: {dims:?}");
    assert!(dims.iter().any(|&d| d == 0));
    assert!(dims.iter().any(|&d| d > 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn margin_is_symmetric(
        x in prop::array::uniform2(-0.7f64..0.7),
        y in prop::array::uniform2(-0.7f64..0.7),
        l in 0.0f64..=1.0,
    ) {
        let f = ScalarField::parse("x1^3 - x1*x2 + log(2 + x2)", common::unit_ball()).unwrap();
        let m = Modulus::sqrt();
        let (a, _) = semiconvex_margin(&f, &m, Norm::L2, &x, &y, l).unwrap();
        let (b, _) = semiconvex_margin(&f, &m, Norm::L2, &y, &x, 1.0 - l).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
