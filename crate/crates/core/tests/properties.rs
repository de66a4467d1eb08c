use std::f64::consts::PI;

use cx_core::construct::{build_nondiv, rewire_for_divergence, Stage};
use cx_core::operators::{
    apply_nondiv, pushforward_coefficients, quadrant_coefficients, shear_matrix, CoeffMatrix,
};
use cx_core::quadrature::{integrate_with, Domain2D, QuadratureOptions};
use cx_core::verify::{rational, residual_suite, Tolerances};
use cx_core::Quadrant;
use num_rational::Ratio;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.02f64..3.5, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pushforward_has_unit_determinant(omega in 0.05f64..(PI - 0.05)) {
        let a = pushforward_coefficients(&shear_matrix(omega).unwrap()).unwrap();
        let cot = 1.0 / omega.tan();
        prop_assert!((a.a11 + a.a22 - (2.0 + cot * cot)).abs() <= 1e-12 * (2.0 + cot * cot));
        prop_assert!((a.a11 * a.a22 - a.a12 * a.a21 - 1.0).abs() <= 1e-12 * a.a11);
        prop_assert_eq!(a.a22, 1.0);
        prop_assert_eq!(a.a12, a.a21);
    }

    #[test]
    fn reflected_coefficients_follow_sign_law(
        a11 in 0.5f64..5.0, a22 in 0.5f64..5.0, t in -0.9f64..0.9,
    ) {
        let off = t * (a11 * a22).sqrt();
        let q = quadrant_coefficients(CoeffMatrix::new(a11, off, off, a22)).unwrap();
        for quad in Quadrant::ALL {
            let (s1, s2) = quad.signs();
            let m = q.get(quad);
            prop_assert_eq!(m.a11, a11);
            prop_assert_eq!(m.a22, a22);
            prop_assert_eq!(m.a12, s1 * s2 * off);
            prop_assert_eq!(m.a21, s1 * s2 * off);
        }
        let r = rewire_for_divergence(&q);
        for quad in Quadrant::ALL {
            prop_assert_eq!(r.get(quad).a12, 0.0);
            prop_assert_eq!(r.get(quad).a21, 2.0 * q.get(quad).a12);
        }
    }

    #[test]
    fn full_plane_solution_is_odd(p in 2.2f64..12.0, n in 2u32..2000, x in point()) {
        let inst = build_nondiv(p, n, Stage::Full).unwrap();
        let u = &inst.solution;
        let v = u.value(x).unwrap();
        prop_assert_eq!(u.value([-x[0], x[1]]).unwrap(), -v);
        prop_assert_eq!(u.value([x[0], -x[1]]).unwrap(), -v);
    }

    #[test]
    fn strong_equation_holds_pointwise(p in 2.2f64..12.0, n in 2u32..4000, x in point()) {
        prop_assume!(x[0].abs() > 1e-6 && x[1].abs() > 1e-6);
        let inst = build_nondiv(p, n, Stage::Full).unwrap();
        let (lhs, _) = apply_nondiv(&inst.coefficients, &inst.solution, x).unwrap();
        let f = inst.source().value(x).unwrap();
        prop_assert!((lhs - f).abs() <= 1e-8 * (1.0 + f.abs()), "{} vs {}", lhs, f);
    }

    #[test]
    fn rational_reconstruction_round_trips(num in -200i64..200, den in 1i64..200) {
        let r = Ratio::new(num, den);
        prop_assert_eq!(rational(num as f64 / den as f64, 1000), Some(r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn residual_suite_is_deterministic(seed in any::<u64>()) {
        let inst = build_nondiv(4.0, 64, Stage::Full).unwrap();
        let a = residual_suite(&inst, 200, seed, &Tolerances::default()).unwrap();
        let b = residual_suite(&inst, 200, seed, &Tolerances::default()).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert!(a.pass);
    }

    #[test]
    fn parallel_matches_serial(s in -1.8f64..2.0, k in 0.0f64..6.0) {
        let d = Domain2D::disk(1.5).unwrap().with_axis_breaks();
        let f = move |x: [f64; 2]| x[0].hypot(x[1]).powf(s) * (k * x[1]).cos();
        let opts = QuadratureOptions::new(1e-9);
        let par = integrate_with(f, &d, &opts).unwrap();
        let ser = integrate_with(f, &d, &opts.serial()).unwrap();
        prop_assert_eq!(par.value.to_bits(), ser.value.to_bits());
        prop_assert_eq!(par.panels, ser.panels);
    }

    #[test]
    fn extra_breakpoints_do_not_move_the_integral(
        s in -1.5f64..1.5, rb in 0.05f64..1.9, tb in 0.05f64..6.2,
    ) {
        let tol = 1e-10;
        let d = Domain2D::disk(2.0).unwrap();
        let f = move |x: [f64; 2]| x[0].hypot(x[1]).powf(s) * (1.0 + 0.5 * x[0]);
        let opts = QuadratureOptions::new(tol);
        let plain = integrate_with(f, &d, &opts).unwrap();
        let split = integrate_with(
            f,
            &d.clone().with_radial_breaks([rb]).with_angular_breaks([tb]),
            &opts,
        )
        .unwrap();
        let scale = plain.value.abs().max(1.0);
        prop_assert!((plain.value - split.value).abs() <= 2.0 * tol * scale);
    }
}
