use std::f64::consts::PI;

use cx_core::construct::{build_div, build_nondiv, build_ps, Stage};
use cx_core::fields::omega_for_p;
use cx_core::geom::Quadrant;
use cx_core::operators::CoeffMatrix;
use cx_core::quadrature::{Domain2D, JetKind};
use cx_core::verify::{
    derivative_check, integrability_numeric, integrability_numeric_field, integrability_suite,
    integrability_threshold, interface_flux_suite, perturb_entry, quadrature_suite, rational,
    residual_mutation_suite, residual_suite, run_suite, weak_suite, CheckRecord, Integrability,
    SuiteName, Tolerances, VerificationReport,
};
use cx_core::ScalarField;
use num_rational::Ratio;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn failed(r: &VerificationReport) -> Vec<&CheckRecord> {
    r.failures().collect()
}

fn scale(m: &CoeffMatrix, k: f64) -> CoeffMatrix {
    CoeffMatrix::new(k * m.a11, k * m.a12, k * m.a21, k * m.a22)
}

#[test]
fn residual_suite_passes_and_mutations_are_caught() {
    let inst = build_nondiv(8.0, 256, Stage::Full).unwrap();
    let report = residual_suite(&inst, 2000, 3, &tol()).unwrap();
    assert!(report.pass, "{:?}", failed(&report));
    assert!(report.stats["residual_max"] <= 1e-8);
    let mutated = residual_mutation_suite(&inst, 2000, 3, &tol()).unwrap();
    assert!(mutated.pass, "{:?}", failed(&mutated));

    let broken = inst.with_coefficients(perturb_entry(&inst.coefficients, Quadrant::III, 0, 0.01));
    assert!(!residual_suite(&broken, 2000, 3, &tol()).unwrap().pass);
    assert!(residual_suite(&build_div(4.0, 16).unwrap(), 10, 0, &tol()).is_err());
}

#[test]
fn residual_suite_is_seeded() {
    let inst = build_nondiv(3.0, 16, Stage::Half).unwrap();
    let a = residual_suite(&inst, 500, 11, &tol()).unwrap();
    let b = residual_suite(&inst, 500, 11, &tol()).unwrap();
    let c = residual_suite(&inst, 500, 12, &tol()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_ne!(a.stats["residual_max"], c.stats["residual_max"]);
}

#[test]
fn interface_suite_detects_wrong_contrast() {
    let inst = build_ps(PI / 4.0, 1.0).unwrap();
    assert!(interface_flux_suite(&inst, &tol()).unwrap().pass);
    let wrong = inst.with_coefficients(
        inst.coefficients
            .map(|q, m| if q == Quadrant::II { scale(m, 1.001) } else { *m }),
    );
    let report = interface_flux_suite(&wrong, &tol()).unwrap();
    assert!(!report.pass);
    assert!(failed(&report).iter().all(|f| f.check.contains("flux")));
}

#[test]
fn weak_suite_on_div_and_ps() {
    let div = build_div(4.0, 16).unwrap();
    let report = weak_suite(&div, 4, 5, 1e-6, &tol()).unwrap();
    assert!(report.pass, "{:?}", failed(&report));

    let ps = build_ps(PI / 3.0, 1.0).unwrap();
    assert!(weak_suite(&ps, 4, 5, 1e-8, &tol()).unwrap().pass);
    let wrong = ps.with_coefficients(ps.coefficients.map(|q, m| {
        if q == Quadrant::IV {
            scale(m, 1.5)
        } else {
            *m
        }
    }));
    assert!(!weak_suite(&wrong, 20, 5, 1e-8, &tol()).unwrap().pass);
}

#[test]
fn derivative_check_on_constructed_fields() {
    let c = omega_for_p(4.0).unwrap();
    let full = build_nondiv(4.0, 16, Stage::Full).unwrap();
    let d = Domain2D::disk(3.5).unwrap().with_axis_breaks();
    assert!(derivative_check(&full.solution, &d, 100, 1, &tol()).unwrap().pass);
    let sector = Domain2D::sector(0.0, 3.0, 0.0, c.omega()).unwrap();
    let v = cx_core::fields::corner_harmonic(&c);
    assert!(derivative_check(&v, &sector, 100, 1, &tol()).unwrap().pass);
}

#[test]
fn exact_threshold() {
    let alpha = Ratio::new(-1, 3);
    assert_eq!(integrability_threshold(alpha, Ratio::new(23, 4)).unwrap(), Integrability::Finite);
    assert_eq!(integrability_threshold(alpha, Ratio::from_integer(6)).unwrap(), Integrability::Infinite);
    assert_eq!(integrability_threshold(alpha, Ratio::new(25, 4)).unwrap(), Integrability::Infinite);
    assert!(integrability_threshold(alpha, Ratio::from_integer(1)).is_err());
    assert_eq!(rational(2.0 / 3.0, 1000), Some(Ratio::new(2, 3)));
    assert_eq!(rational(0.75, 1000), Some(Ratio::new(3, 4)));
    assert_eq!(rational(f64::NAN, 1000), None);
}

#[test]
fn numeric_classification_brackets_threshold() {
    let below = integrability_numeric(-1.0 / 3.0, 5.75, 1e-8).unwrap();
    let above = integrability_numeric(-1.0 / 3.0, 6.25, 1e-8).unwrap();
    assert_eq!(below.classification, Integrability::Finite);
    assert_eq!(above.classification, Integrability::Infinite);
    assert!(below.growth_ratio < 1.0 && above.growth_ratio > 1.0);
    assert_eq!(below.partials.len(), below.epsilons.len());
    assert!(below.partials.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn numeric_field_classification_matches_closed_form() {
    let ps = build_ps(PI / 6.0, 1.0).unwrap();
    let f = integrability_numeric_field(&ps.solution, JetKind::Gradient, 5.75, 1e-8).unwrap();
    assert_eq!(f.classification, Integrability::Finite);
    let f = integrability_numeric_field(&ps.solution, JetKind::Gradient, 6.25, 1e-8).unwrap();
    assert_eq!(f.classification, Integrability::Infinite);
    let smooth = ScalarField::linear(1.0, [1.0, 0.0]);
    let f = integrability_numeric_field(&smooth, JetKind::Value, 4.0, 1e-8).unwrap();
    assert_eq!(f.classification, Integrability::Finite);
}

#[test]
fn integrability_suite_for_each_angle() {
    for theta0 in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let r = integrability_suite(&build_ps(theta0, 1.0).unwrap(), &tol()).unwrap();
        assert!(r.pass, "theta0 = {theta0}: {:?}", failed(&r));
    }
}

#[test]
fn quadrature_battery() {
    let r = quadrature_suite(&tol()).unwrap();
    assert!(r.pass, "{:?}", failed(&r));
    assert!(r.records.len() >= 10);
}

#[test]
fn cheap_suites_by_name() {
    for name in [SuiteName::Residual, SuiteName::Interface, SuiteName::Derivative, SuiteName::Quadrature] {
        let reports = run_suite(name, 42, &tol()).unwrap();
        assert!(!reports.is_empty());
        for r in &reports {
            assert!(r.pass, "{name:?}/{}: {:?}", r.suite, failed(r));
        }
    }
}
