use std::f64::consts::PI;

use approx::assert_relative_eq;
use cx_core::fields::{corner_harmonic, omega_for_p};
use cx_core::operators::{
    apply_nondiv, ellipticity_constant, pushforward_coefficients, quadrant_coefficients,
    shear_matrix, weak_residual, BumpTestFunction, CoeffMatrix, QuadrantCoefficients, Rhs,
};
use cx_core::{Axis, CxError, Mat2, Quadrant, ScalarField};

fn radius_squared() -> ScalarField {
    let x1 = ScalarField::coordinate(Axis::X1);
    let x2 = ScalarField::coordinate(Axis::X2);
    x1.product(&x1).add(&x2.product(&x2))
}

#[test]
fn pushforward_for_two_thirds_pi() {
    let s = 1.0 / 3f64.sqrt();
    let a = pushforward_coefficients(&shear_matrix(2.0 * PI / 3.0).unwrap()).unwrap();
    for (got, want) in a.entries().into_iter().zip([4.0 / 3.0, s, s, 1.0]) {
        assert!((got - want).abs() <= 1e-14, "{got} vs {want}");
    }
}

#[test]
fn pushforward_trace_identity() {
    for omega in [0.3, 1.0, PI / 2.0, 2.0, 3.0] {
        let a = pushforward_coefficients(&shear_matrix(omega).unwrap()).unwrap();
        let cot = 1.0 / omega.tan();
        assert_relative_eq!(a.a11, 1.0 + cot * cot, max_relative = 1e-14);
        assert_relative_eq!(a.a12, -cot, max_relative = 1e-14, epsilon = 1e-15);
        assert_eq!(a.a22, 1.0);
        assert_eq!(a.a12, a.a21);
    }
    assert_eq!(shear_matrix(PI / 2.0).unwrap(), Mat2::new(1.0, 0.0, 0.0, 1.0));
    for bad in [0.0, PI, -1.0, f64::NAN] {
        assert!(shear_matrix(bad).is_err());
    }
}

#[test]
fn shear_maps_sector_edge_to_the_vertical_axis() {
    let omega = 2.0 * PI / 3.0;
    let a = shear_matrix(omega).unwrap();
    let y = a.apply([omega.cos(), omega.sin()]);
    assert!(y[0].abs() < 1e-15 && y[1] > 0.0);
    assert_eq!(a.apply([1.0, 0.0]), [1.0, 0.0]);
}

#[test]
fn quadrant_sign_law() {
    let base = CoeffMatrix::new(2.0, 0.5, 0.5, 1.0);
    let q = quadrant_coefficients(base).unwrap();
    for quad in Quadrant::ALL {
        let (s1, s2) = quad.signs();
        let m = q.get(quad);
        assert_eq!(m.a11, 2.0);
        assert_eq!(m.a22, 1.0);
        assert_eq!(m.a12, s1 * s2 * 0.5);
        assert_eq!(m.a21, s1 * s2 * 0.5);
    }
    assert!(q.diagonals_constant());
    assert!(matches!(
        quadrant_coefficients(CoeffMatrix::new(1.0, 2.0, 2.0, 1.0)),
        Err(CxError::NonElliptic { .. })
    ));
}

#[test]
fn ellipticity_for_two_thirds_pi() {
    let a = pushforward_coefficients(&shear_matrix(2.0 * PI / 3.0).unwrap()).unwrap();
    let e = ellipticity_constant(&quadrant_coefficients(a).unwrap()).unwrap();
    assert!((e.delta - (7.0 - 13f64.sqrt()) / 6.0).abs() <= 1e-12);
    assert!(e.entry_bound_holds);
}

#[test]
fn ellipticity_uses_the_symmetric_part() {
    let m = CoeffMatrix::new(1.0, 0.0, 1.0, 1.0);
    let e = ellipticity_constant(&QuadrantCoefficients::uniform(m)).unwrap();
    assert_relative_eq!(e.delta, 0.5, max_relative = 1e-15);
}

#[test]
fn identity_operator_on_harmonic_field() {
    let v = corner_harmonic(&omega_for_p(4.0).unwrap());
    let id = QuadrantCoefficients::uniform(CoeffMatrix::IDENTITY);
    for x in [[0.3, 0.4], [-0.2, 0.9], [1.5, 0.01]] {
        let (lap, _) = apply_nondiv(&id, &v, x).unwrap();
        let h = v.eval_jet(x).unwrap().hessian;
        assert!(lap.abs() <= 1e-9 * h[0][0].abs().max(1.0));
    }
}

#[test]
fn nondiv_contracts_full_hessian() {
    let u = radius_squared().add(&ScalarField::coordinate(Axis::X1).product(&ScalarField::coordinate(Axis::X2)));
    let m = CoeffMatrix::new(2.0, 0.3, -0.1, 1.5);
    let (val, on_axis) = apply_nondiv(&QuadrantCoefficients::uniform(m), &u, [0.5, 0.5]).unwrap();
    assert_relative_eq!(val, 2.0 * 2.0 + 0.3 * 1.0 - 0.1 * 1.0 + 1.5 * 2.0, max_relative = 1e-14);
    assert!(!on_axis);
    let (_, on_axis) = apply_nondiv(&QuadrantCoefficients::uniform(m), &u, [0.5, 0.0]).unwrap();
    assert!(on_axis);
}

#[test]
fn weak_residual_vanishes_for_a_strong_solution() {
    let id = QuadrantCoefficients::uniform(CoeffMatrix::IDENTITY);
    let u = radius_squared();
    let good = Rhs::source(ScalarField::constant(4.0));
    let bad = Rhs::zero();
    let bumps = [
        BumpTestFunction::new([0.0, 0.0], 0.5).unwrap(),
        BumpTestFunction::new([0.7, -0.4], 0.3).unwrap(),
    ];
    for test in bumps {
        let r = weak_residual(&id, &u, &good, &test, 1e-10).unwrap();
        assert!(r.value.abs() < 1e-9, "{r:?}");
        let r = weak_residual(&id, &u, &bad, &test, 1e-10).unwrap();
        assert!(r.value.abs() > 1e-3, "{r:?}");
    }
}

#[test]
fn weak_residual_divergence_term() {
    let id = QuadrantCoefficients::uniform(CoeffMatrix::IDENTITY);
    let x1 = ScalarField::coordinate(Axis::X1);
    let u = x1.product(&x1).scaled(0.5);
    let rhs = Rhs::divergence([x1.clone(), ScalarField::zero()]);
    let test = BumpTestFunction::new([0.2, 0.3], 0.6).unwrap();
    let r = weak_residual(&id, &u, &rhs, &test, 1e-10).unwrap();
    assert!(r.value.abs() < 1e-10);
    let rhs = Rhs::divergence([x1.scaled(2.0), ScalarField::zero()]);
    assert!(weak_residual(&id, &u, &rhs, &test, 1e-10).unwrap().value.abs() > 1e-3);
}

#[test]
fn bump_validation_and_domain() {
    assert!(BumpTestFunction::new([0.0, 0.0], 0.0).is_err());
    assert!(BumpTestFunction::new([f64::NAN, 0.0], 1.0).is_err());
    let b = BumpTestFunction::new([2.0, 0.0], 0.5).unwrap();
    let d = b.domain().unwrap();
    assert!(d.r_min <= 1.5 && d.r_max >= 2.5);
    let phi = b.field();
    assert_eq!(phi.value([2.0, 0.0]).unwrap(), 1.0);
    assert_eq!(phi.value([2.6, 0.0]).unwrap(), 0.0);
}
