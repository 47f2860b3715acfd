//! End-to-end flow over the public API: parse a family from JSON, build Φ by
//! both routes, freeze parameters, read off the diagonal order, evaluate the
//! density, and estimate the functionals on an interval family.

use nonconc_core::density::{density_infimum, DensityOpts, Positivity};
use nonconc_core::diagonal::order_of_vanishing;
use nonconc_core::functionals::{int_functional, sup_functional, FunctionalOpts};
use nonconc_core::geometry::{build_phi_jacobian, build_phi_wedge, GammaSpec};
use nonconc_core::poly::rat_int;
use nonconc_core::sets::{MeasureSpec, SetSpec};

const LINE_FAMILY: &str = r#"{
  "n": 1, "N1": 2, "N2": 2,
  "components": [
    {"vars": ["t", "x1", "x2"], "expr": "t"},
    {"vars": ["t", "x1", "x2"], "expr": "x1 + t*x2"}
  ]
}"#;

#[test]
fn family_to_density_and_functionals() {
    let gamma: GammaSpec = serde_json::from_str(LINE_FAMILY).unwrap();
    gamma.validate().unwrap();
    assert_eq!((gamma.r(), gamma.k()), (1, 2));

    let phi_w = build_phi_wedge(&gamma).unwrap();
    let phi_j = build_phi_jacobian(&gamma).unwrap();
    assert_eq!(phi_w.body, phi_j.body);

    // freeze the family parameter x = (0, 1): Φ_x(t1, t2) = ±(t1 − t2)
    let frozen = phi_j.freeze_params(&[rat_int(0), rat_int(1)]).unwrap();
    let expansion = order_of_vanishing(&frozen).unwrap();
    assert_eq!(expansion.q, 1);

    // translation-invariant density: the objective is identically 1
    let opts = DensityOpts {
        seed: 7,
        starts: 4,
        iterations: 80,
        o_samples: 8,
        ..Default::default()
    };
    let report = density_infimum(&frozen, Some(1), &[0.25], &[], &opts).unwrap();
    assert!((report.upper - 1.0).abs() < 1e-9);
    assert_eq!(report.positivity, Positivity::Positive);

    // S over an interval is its length; A over [0, L] is L³/3
    let func_opts = FunctionalOpts {
        seed: 7,
        sup_budget: 5_000,
        int_budget: 80_000,
        shards: 4,
        ..Default::default()
    };
    let e = SetSpec::Box {
        lo: vec![-0.5],
        hi: vec![1.0],
    };
    let s = sup_functional(&frozen, &e, &func_opts).unwrap();
    assert!((s - 1.5).abs() < 1e-9, "diameter {s}");
    let mu = MeasureSpec::Lebesgue { support: e.clone() };
    let (a, err) = int_functional(&frozen, &mu, &e, &func_opts).unwrap();
    let expect = 1.5f64.powi(3) / 3.0;
    assert!(
        (a - expect).abs() <= 3.0 * err + 1e-3,
        "integral {a} ± {err} vs {expect}"
    );
}

#[test]
fn gamma_json_rejects_bad_shapes() {
    // component polynomials over the wrong variable count
    let mismatched = r#"{
      "n": 2, "N1": 3, "N2": 3,
      "components": [
        {"vars": ["t", "x1"], "expr": "t"},
        {"vars": ["t", "x1"], "expr": "x1"},
        {"vars": ["t", "x1"], "expr": "t*x1"}
      ]
    }"#;
    let gamma: GammaSpec = serde_json::from_str(mismatched).unwrap();
    assert!(gamma.validate().is_err());

    // N2 not a multiple of r = N1 − n
    let indivisible = r#"{
      "n": 1, "N1": 3, "N2": 3,
      "components": [
        {"vars": ["t", "x1", "x2", "x3"], "expr": "t"},
        {"vars": ["t", "x1", "x2", "x3"], "expr": "x1"},
        {"vars": ["t", "x1", "x2", "x3"], "expr": "x2"}
      ]
    }"#;
    let gamma: GammaSpec = serde_json::from_str(indivisible).unwrap();
    assert!(gamma.validate().is_err());
}
