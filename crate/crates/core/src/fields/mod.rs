//! Immutable planar scalar fields with exact jets.
//!
//! A [`ScalarField`] is an expression over a closed set of constructors.
//! Evaluation returns a truncated Taylor [`Jet`] built by exact chain and
//! product rules; no numerical differentiation happens anywhere in here.

mod builders;
mod step;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

pub use builders::{
    affine_pullback, corner_harmonic, cutoff, omega_for_p, ps_profile, ps_profile_from_parts,
    reflect, truncated_corner, AngularBranch, CornerParams, CutoffParams, PsParams, PsProfile,
};
pub use step::smooth_step;

use crate::error::{CxError, Result};
use crate::geom::{dedup_angles, map_ray, Axis, Mat2, Parity, Quadrant};
use crate::jet::{Jet, MAX_ORDER};

/// Points and rays where jets may be undefined or discontinuous.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SingularSet {
    /// Jets are undefined at the origin.
    pub origin: bool,
    /// Interface rays (angles in `[0, 2pi)`) across which derivatives may jump.
    pub rays: Vec<f64>,
    /// Radii of circles where a radial factor switches regime; jets are
    /// smooth there but quadrature panels are split on them.
    pub radii: Vec<f64>,
}

impl SingularSet {
    fn union(mut self, other: SingularSet) -> SingularSet {
        self.origin |= other.origin;
        self.rays.extend(other.rays);
        self.radii.extend(other.radii);
        self.normalize()
    }

    fn normalize(mut self) -> SingularSet {
        dedup_angles(&mut self.rays);
        self.radii.retain(|r| r.is_finite() && *r > 0.0);
        self.radii.sort_by(f64::total_cmp);
        self.radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        self
    }
}

/// Value, gradient and Hessian of a field at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetEval {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    /// The point lies on an interface; the jets are one-sided limits.
    pub on_interface: bool,
}

#[derive(Debug)]
enum Node {
    Constant(f64),
    Linear {
        value: f64,
        gradient: [f64; 2],
    },
    /// `Im(coeff * z^exponent)` with `arg z` taken in `(center - pi, center + pi]`.
    PolarPower {
        coeff: Complex64,
        exponent: f64,
        center: f64,
    },
    /// `eta(scale * |x| + shift)`.
    RadialStep {
        scale: f64,
        shift: f64,
    },
    /// `exp(1 - 1/(1 - |x - c|^2 / rho^2))` inside the disk, zero outside.
    Bump {
        center: [f64; 2],
        radius: f64,
    },
    Sum(Vec<ScalarField>),
    Product(ScalarField, ScalarField),
    Scale(f64, ScalarField),
    /// `inner(inverse * x)`.
    Pullback {
        inner: ScalarField,
        forward: Mat2,
        inverse: Mat2,
    },
    /// `inner` on the positive side of `axis`, `parity * inner(sigma x)` on the other.
    Reflect {
        inner: ScalarField,
        axis: Axis,
        parity: Parity,
    },
    Partial {
        inner: ScalarField,
        axis: Axis,
    },
    /// One branch per open quadrant, selected with the axis tie-break.
    Quadrants(Box<[ScalarField; 4]>),
}

#[derive(Clone, Copy)]
struct Eval {
    jet: Jet,
    /// The field vanishes identically on a neighbourhood of the point.
    flat_zero: bool,
    interface: bool,
}

impl Eval {
    fn smooth(jet: Jet) -> Self {
        Eval {
            jet,
            flat_zero: false,
            interface: false,
        }
    }

    fn zero(order: usize) -> Self {
        Eval {
            jet: Jet::zero(order),
            flat_zero: true,
            interface: false,
        }
    }
}

/// An immutable, cheaply clonable scalar field on (part of) the plane.
#[derive(Clone)]
pub struct ScalarField(Arc<Node>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.describe())
    }
}

impl ScalarField {
    fn from_node(node: Node) -> Self {
        ScalarField(Arc::new(node))
    }

    pub fn constant(value: f64) -> Self {
        Self::from_node(Node::Constant(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn linear(value: f64, gradient: [f64; 2]) -> Self {
        Self::from_node(Node::Linear { value, gradient })
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(axis: Axis) -> Self {
        let mut g = [0.0; 2];
        g[axis.index()] = 1.0;
        Self::linear(0.0, g)
    }

    /// `Im(coeff * z^exponent)` on the branch `arg z in (center - pi, center + pi]`.
    ///
    /// Harmonic away from the origin and the branch cut at `center + pi`.
    pub fn polar_power(coeff: Complex64, exponent: f64, center: f64) -> Self {
        Self::from_node(Node::PolarPower {
            coeff,
            exponent,
            center,
        })
    }

    /// `eta(scale * |x| + shift)` for the smooth step `eta`.
    pub fn radial_step(scale: f64, shift: f64) -> Self {
        Self::from_node(Node::RadialStep { scale, shift })
    }

    /// Unit-height C-infinity bump supported in the open disk `|x - center| < radius`.
    pub fn bump(center: [f64; 2], radius: f64) -> Self {
        Self::from_node(Node::Bump { center, radius })
    }

    pub fn sum(terms: Vec<ScalarField>) -> Self {
        Self::from_node(Node::Sum(terms))
    }

    pub fn product(&self, other: &ScalarField) -> Self {
        Self::from_node(Node::Product(self.clone(), other.clone()))
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        Self::sum(vec![self.clone(), other.clone()])
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_node(Node::Scale(k, self.clone()))
    }

    /// `x -> self(A^-1 x)`.
    pub fn pullback(&self, a: Mat2) -> Result<Self> {
        let inverse = a.inverse().ok_or(CxError::SingularMatrix { det: a.det() })?;
        Ok(Self::from_node(Node::Pullback {
            inner: self.clone(),
            forward: a,
            inverse,
        }))
    }

    /// Extend from the positive side of `axis` by the given parity.
    pub fn reflect(&self, axis: Axis, parity: Parity) -> Self {
        Self::from_node(Node::Reflect {
            inner: self.clone(),
            axis,
            parity,
        })
    }

    pub fn partial(&self, axis: Axis) -> Self {
        Self::from_node(Node::Partial {
            inner: self.clone(),
            axis,
        })
    }

    /// `D11 + D22` as a field.
    pub fn laplacian(&self) -> Self {
        let d11 = self.partial(Axis::X1).partial(Axis::X1);
        let d22 = self.partial(Axis::X2).partial(Axis::X2);
        d11.add(&d22)
    }

    /// Piecewise field: `branches[q]` on quadrant `q` (order I, II, III, IV).
    pub fn quadrants(branches: [ScalarField; 4]) -> Self {
        Self::from_node(Node::Quadrants(Box::new(branches)))
    }

    /// Jet of the given order at `x`, with the interface flag.
    pub fn jet(&self, x: [f64; 2], order: usize) -> Result<(Jet, bool)> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(CxError::NonFinite { point: x });
        }
        if order > MAX_ORDER {
            return Err(CxError::OrderTooHigh { requested: order });
        }
        let e = self.eval(x, order)?;
        if !e.jet.is_finite() {
            return Err(CxError::NonFinite { point: x });
        }
        Ok((e.jet, e.interface))
    }

    pub fn value(&self, x: [f64; 2]) -> Result<f64> {
        Ok(self.jet(x, 0)?.0.value())
    }

    pub fn eval_jet(&self, x: [f64; 2]) -> Result<JetEval> {
        let (jet, on_interface) = self.jet(x, 2)?;
        Ok(JetEval {
            value: jet.value(),
            gradient: jet.gradient(),
            hessian: jet.hessian(),
            on_interface,
        })
    }

    fn eval(&self, x: [f64; 2], order: usize) -> Result<Eval> {
        match &*self.0 {
            Node::Constant(c) => {
                let flat_zero = *c == 0.0;
                Ok(Eval {
                    jet: Jet::constant(*c, order),
                    flat_zero,
                    interface: false,
                })
            }
            Node::Linear { value, gradient } => {
                let v = value + gradient[0] * x[0] + gradient[1] * x[1];
                Ok(Eval::smooth(Jet::from_parts(v, *gradient, [[0.0; 2]; 2], order)))
            }
            Node::PolarPower {
                coeff,
                exponent,
                center,
            } => polar_power_jet(*coeff, *exponent, *center, x, order).map(Eval::smooth),
            Node::RadialStep { scale, shift } => radial_step_jet(*scale, *shift, x, order),
            Node::Bump { center, radius } => {
                let dx = Jet::coordinate(0, x, order) + (-center[0]);
                let dy = Jet::coordinate(1, x, order) + (-center[1]);
                let s = (dx * dx + dy * dy).scale(1.0 / (radius * radius));
                Ok(match step::bump_profile(s) {
                    Some(j) => Eval::smooth(j),
                    None => Eval::zero(order),
                })
            }
            Node::Sum(terms) => {
                let mut acc = Eval::zero(order);
                for t in terms {
                    let e = t.eval(x, order)?;
                    acc.jet = acc.jet + e.jet;
                    acc.flat_zero &= e.flat_zero;
                    acc.interface |= e.interface;
                }
                Ok(acc)
            }
            Node::Product(a, b) => {
                // A factor vanishing on a neighbourhood annihilates the other
                // even where the other is singular.
                let ea = match a.eval(x, order) {
                    Ok(e) => e,
                    Err(err) => {
                        return match b.eval(x, order) {
                            Ok(eb) if eb.flat_zero => Ok(Eval::zero(order)),
                            _ => Err(err),
                        };
                    }
                };
                if ea.flat_zero {
                    return Ok(Eval::zero(order));
                }
                let eb = b.eval(x, order)?;
                if eb.flat_zero {
                    return Ok(Eval::zero(order));
                }
                Ok(Eval {
                    jet: ea.jet * eb.jet,
                    flat_zero: false,
                    interface: ea.interface | eb.interface,
                })
            }
            Node::Scale(k, inner) => {
                let mut e = inner.eval(x, order)?;
                e.jet = e.jet.scale(*k);
                e.flat_zero |= *k == 0.0;
                Ok(e)
            }
            Node::Pullback { inner, inverse, .. } => {
                let y = inverse.apply(x);
                let mut e = inner.eval(y, order)?;
                e.jet = e.jet.substitute_linear(inverse.0);
                Ok(e)
            }
            Node::Reflect {
                inner,
                axis,
                parity,
            } => {
                let k = axis.index();
                let on_axis = x[k] == 0.0;
                if x[k] > 0.0 {
                    return inner.eval(x, order);
                }
                let mut y = x;
                y[k] = -x[k];
                let mut e = inner.eval(y, order)?;
                e.jet = e.jet.mirror(k).scale(parity.sign());
                e.interface |= on_axis;
                Ok(e)
            }
            Node::Partial { inner, axis } => {
                if order + 1 > MAX_ORDER {
                    return Err(CxError::OrderTooHigh {
                        requested: order + 1,
                    });
                }
                let e = inner.eval(x, order + 1)?;
                Ok(Eval {
                    jet: e.jet.partial(axis.index()),
                    ..e
                })
            }
            Node::Quadrants(branches) => {
                let (q, on_axis) = Quadrant::locate(x);
                let mut e = branches[q.index()].eval(x, order)?;
                e.interface |= on_axis;
                Ok(e)
            }
        }
    }

    /// Where jets may fail or jump.
    pub fn singular_set(&self) -> SingularSet {
        match &*self.0 {
            Node::Constant(_) | Node::Linear { .. } | Node::Bump { .. } => SingularSet::default(),
            Node::PolarPower { exponent, .. } => SingularSet {
                origin: !is_nonneg_integer(*exponent),
                ..Default::default()
            },
            Node::RadialStep { scale, shift } => {
                let mut radii = Vec::new();
                for t in [0.0, 1.0] {
                    let r = (t - shift) / scale;
                    if r > 0.0 {
                        radii.push(r);
                    }
                }
                SingularSet {
                    origin: *shift > 0.0 && *shift < 1.0,
                    rays: Vec::new(),
                    radii,
                }
                .normalize()
            }
            Node::Sum(terms) => terms
                .iter()
                .fold(SingularSet::default(), |acc, t| acc.union(t.singular_set())),
            Node::Product(a, b) => a.singular_set().union(b.singular_set()),
            Node::Scale(_, inner) | Node::Partial { inner, .. } => inner.singular_set(),
            Node::Pullback { inner, forward, .. } => {
                let s = inner.singular_set();
                SingularSet {
                    origin: s.origin,
                    rays: s.rays.iter().map(|&phi| map_ray(forward, phi)).collect(),
                    // circles map to ellipses, which are not radial breakpoints
                    radii: Vec::new(),
                }
                .normalize()
            }
            Node::Reflect { inner, axis, .. } => {
                let s = inner.singular_set();
                let mut rays = s.rays.clone();
                for &phi in &s.rays {
                    rays.push(match axis {
                        Axis::X2 => -phi,
                        Axis::X1 => std::f64::consts::PI - phi,
                    });
                }
                match axis {
                    Axis::X2 => rays.extend([0.0, std::f64::consts::PI]),
                    Axis::X1 => rays.extend([FRAC_PI_2, 3.0 * FRAC_PI_2]),
                }
                SingularSet {
                    origin: s.origin,
                    rays,
                    radii: s.radii,
                }
                .normalize()
            }
            Node::Quadrants(branches) => {
                let base = SingularSet {
                    origin: false,
                    rays: (0..4).map(|k| k as f64 * FRAC_PI_2).collect(),
                    radii: Vec::new(),
                };
                branches
                    .iter()
                    .fold(base, |acc, b| acc.union(b.singular_set()))
            }
        }
    }

    /// Short structural description, used in reports and debug output.
    pub fn describe(&self) -> String {
        match &*self.0 {
            Node::Constant(c) => format!("{c}"),
            Node::Linear { value, gradient } => {
                format!("({value} + {}*x1 + {}*x2)", gradient[0], gradient[1])
            }
            Node::PolarPower {
                coeff, exponent, ..
            } => format!("Im(({}{:+}i)*z^{exponent})", coeff.re, coeff.im),
            Node::RadialStep { scale, shift } => format!("eta({scale}*|x|{shift:+})"),
            Node::Bump { center, radius } => {
                format!("bump(({}, {}), {radius})", center[0], center[1])
            }
            Node::Sum(terms) => {
                let parts: Vec<String> = terms.iter().map(|t| t.describe()).collect();
                format!("({})", parts.join(" + "))
            }
            Node::Product(a, b) => format!("{}*{}", a.describe(), b.describe()),
            Node::Scale(k, inner) => format!("{k}*{}", inner.describe()),
            Node::Pullback { inner, .. } => format!("pullback({})", inner.describe()),
            Node::Reflect {
                inner,
                axis,
                parity,
            } => format!("reflect[{axis:?},{parity:?}]({})", inner.describe()),
            Node::Partial { inner, axis } => format!("D[{axis:?}]({})", inner.describe()),
            Node::Quadrants(b) => format!(
                "quadrants({}, {}, {}, {})",
                b[0].describe(),
                b[1].describe(),
                b[2].describe(),
                b[3].describe()
            ),
        }
    }
}

/// Value, gradient, Hessian and interface flag of `field` at `x`.
pub fn eval_jet(field: &ScalarField, x: [f64; 2]) -> Result<JetEval> {
    field.eval_jet(x)
}

fn is_nonneg_integer(s: f64) -> bool {
    s >= 0.0 && s.fract() == 0.0
}

fn falling_factorial(s: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * (s - m as f64))
}

/// Taylor coefficients of `Im(coeff * z^s)`: since `D1^i D2^j F = i^j F^(i+j)`
/// for holomorphic `F`, every coefficient is an imaginary part of a scaled
/// complex derivative. Working with `r^(s-k) e^{i(s-k)theta}` directly keeps
/// full relative accuracy up to the rays where the field vanishes.
fn polar_power_jet(
    coeff: Complex64,
    s: f64,
    center: f64,
    x: [f64; 2],
    order: usize,
) -> Result<Jet> {
    let r = x[0].hypot(x[1]);
    let mut jet = Jet::zero(order);
    let derivs: Vec<Complex64> = if r == 0.0 {
        if !is_nonneg_integer(s) {
            return Err(CxError::Singular { point: x });
        }
        (0..=order)
            .map(|k| {
                if k as f64 == s {
                    coeff * falling_factorial(s, k)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    } else {
        let theta = branch_angle(x, center);
        let ln_r = r.ln();
        (0..=order)
            .map(|k| {
                let e = s - k as f64;
                let modulus = (e * ln_r).exp();
                let (sin, cos) = (e * theta).sin_cos();
                coeff * falling_factorial(s, k) * Complex64::new(modulus * cos, modulus * sin)
            })
            .collect()
    };
    const FACT: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
    for (k, fk) in derivs.iter().enumerate() {
        for j in 0..=k {
            let i = k - j;
            // Im(i^j * fk)
            let im = match j % 4 {
                0 => fk.im,
                1 => fk.re,
                2 => -fk.im,
                _ => -fk.re,
            };
            jet.set_coeff(i, j, im / (FACT[i] * FACT[j]));
        }
    }
    Ok(jet)
}

fn radial_step_jet(scale: f64, shift: f64, x: [f64; 2], order: usize) -> Result<Eval> {
    let r = x[0].hypot(x[1]);
    let t0 = scale * r + shift;
    if t0 <= 0.0 {
        return Ok(Eval::zero(order));
    }
    if t0 >= 1.0 {
        return Ok(Eval {
            jet: Jet::constant(1.0, order),
            flat_zero: false,
            interface: false,
        });
    }
    if r == 0.0 {
        return Err(CxError::Singular { point: x });
    }
    let xj = Jet::coordinate(0, x, order);
    let yj = Jet::coordinate(1, x, order);
    let t = (xj * xj + yj * yj).sqrt().scale(scale) + shift;
    Ok(match step::eta(t) {
        step::Step::Zero => Eval::zero(order),
        step::Step::One => Eval::smooth(Jet::constant(1.0, order)),
        step::Step::Smooth(j) => Eval::smooth(j),
    })
}

/// Angle of `x` measured on the branch `(center - pi, center + pi]`.
pub(crate) fn branch_angle(x: [f64; 2], center: f64) -> f64 {
    let (sc, cc) = center.sin_cos();
    let rotated = [x[0] * cc + x[1] * sc, x[1] * cc - x[0] * sc];
    center + rotated[1].atan2(rotated[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fd_check(field: &ScalarField, x: [f64; 2], tol: f64) {
        let h = 1e-5;
        let e = field.eval_jet(x).unwrap();
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (field.value(xp).unwrap() - field.value(xm).unwrap()) / (2.0 * h);
            let scale = e.gradient[k].abs().max(1e-3);
            assert!(
                (fd - e.gradient[k]).abs() <= tol * scale,
                "grad[{k}] at {x:?}: fd {fd} vs {}",
                e.gradient[k]
            );
            let gp = field.eval_jet(xp).unwrap().gradient;
            let gm = field.eval_jet(xm).unwrap().gradient;
            for l in 0..2 {
                let fd = (gp[l] - gm[l]) / (2.0 * h);
                let scale = e.hessian[k][l].abs().max(1e-3);
                assert!(
                    (fd - e.hessian[k][l]).abs() <= 10.0 * tol * scale,
                    "hess[{k}][{l}] at {x:?}: fd {fd} vs {}",
                    e.hessian[k][l]
                );
            }
        }
    }

    #[test]
    fn integer_power_is_polynomial() {
        // Im(z^2) = 2 x y
        let f = ScalarField::polar_power(Complex64::new(1.0, 0.0), 2.0, PI / 4.0);
        let e = f.eval_jet([0.3, -1.2]).unwrap();
        assert!((e.value - 2.0 * 0.3 * -1.2).abs() < 1e-15);
        assert!((e.hessian[0][1] - 2.0).abs() < 1e-14);
        assert!(e.hessian[0][0].abs() < 1e-14 && e.hessian[1][1].abs() < 1e-14);
        let origin = f.eval_jet([0.0, 0.0]).unwrap();
        assert_eq!(origin.hessian[0][1], 2.0);
    }

    #[test]
    fn fractional_power_is_singular_at_origin() {
        let f = ScalarField::polar_power(Complex64::new(1.0, 0.0), 1.5, 1.0);
        assert!(matches!(
            f.eval_jet([0.0, 0.0]),
            Err(CxError::Singular { .. })
        ));
        assert!(f.singular_set().origin);
        assert!(matches!(
            f.eval_jet([f64::NAN, 0.0]),
            Err(CxError::NonFinite { .. })
        ));
    }

    #[test]
    fn composite_jets_match_finite_differences() {
        let v = ScalarField::polar_power(Complex64::new(1.0, 0.0), 1.5, PI / 3.0);
        let zeta = ScalarField::radial_step(4.0, -1.0).product(&ScalarField::radial_step(-1.0, 3.0));
        let vn = v.product(&zeta);
        let a = Mat2::new(1.0, 0.5, 0.0, 1.0);
        let u = vn.pullback(a).unwrap().reflect(Axis::X2, Parity::Odd);
        for &x in &[[0.31, 0.22], [0.6, 0.05], [1.1, -0.4], [2.5, 0.7], [0.2, -0.15]] {
            fd_check(&u, x, 1e-6);
        }
        let du = u.partial(Axis::X2);
        for &x in &[[0.31, 0.22], [1.1, -0.4]] {
            fd_check(&du, x, 1e-6);
        }
    }

    #[test]
    fn product_with_flat_zero_factor_is_defined_at_origin() {
        let v = ScalarField::polar_power(Complex64::new(1.0, 0.0), 1.5, 1.0);
        let zeta = ScalarField::radial_step(8.0, -1.0);
        let e = v.product(&zeta).eval_jet([0.0, 0.0]).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.hessian, [[0.0; 2]; 2]);
    }

    #[test]
    fn quadrant_branches_flag_axes() {
        let f = ScalarField::quadrants([
            ScalarField::constant(1.0),
            ScalarField::constant(2.0),
            ScalarField::constant(3.0),
            ScalarField::constant(4.0),
        ]);
        let e = f.eval_jet([1.0, 0.0]).unwrap();
        assert_eq!(e.value, 4.0);
        assert!(e.on_interface);
        assert_eq!(f.eval_jet([-1.0, 1.0]).unwrap().value, 2.0);
        assert_eq!(f.singular_set().rays.len(), 4);
    }

    #[test]
    fn partial_order_limit() {
        let mut f = ScalarField::coordinate(Axis::X1);
        for _ in 0..5 {
            f = f.partial(Axis::X1);
        }
        assert!(matches!(f.eval_jet([1.0, 1.0]), Err(CxError::OrderTooHigh { .. })));
    }
}
