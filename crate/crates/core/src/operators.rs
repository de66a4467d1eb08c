//! Piecewise-constant quadrant coefficients and the operators they define.
//!
//! The non-divergence operator is `a^{ij} D_ij u`; the divergence operator is
//! `D_i(a^{ij} D_j u)`, understood weakly when the coefficients jump.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, CxError, Result};
use crate::fields::ScalarField;
use crate::geom::{symmetric_eigenvalues, Mat2, Quadrant};
use crate::quadrature::{integrate, Domain2D, QuadratureResult};

/// A 2x2 coefficient matrix, not assumed symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct CoeffMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl CoeffMatrix {
    pub const IDENTITY: CoeffMatrix = CoeffMatrix {
        a11: 1.0,
        a12: 0.0,
        a21: 0.0,
        a22: 1.0,
    };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        CoeffMatrix { a11, a12, a21, a22 }
    }

    /// `k` times the identity.
    pub fn scalar(k: f64) -> Self {
        CoeffMatrix::new(k, 0.0, 0.0, k)
    }

    pub fn to_mat2(self) -> Mat2 {
        Mat2::new(self.a11, self.a12, self.a21, self.a22)
    }

    pub fn from_mat2(m: Mat2) -> Self {
        CoeffMatrix::new(m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1))
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn entries_mut(&mut self) -> [&mut f64; 4] {
        [&mut self.a11, &mut self.a12, &mut self.a21, &mut self.a22]
    }

    /// Eigenvalues `(min, max)` of the symmetric part.
    pub fn symmetric_eigenvalues(&self) -> (f64, f64) {
        symmetric_eigenvalues(&self.to_mat2())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `a^{ij} h_ij`.
    pub fn contract(&self, h: &[[f64; 2]; 2]) -> f64 {
        self.a11 * h[0][0] + self.a12 * h[0][1] + self.a21 * h[1][0] + self.a22 * h[1][1]
    }

    /// Conormal flux `(a^{1j} g_j, a^{2j} g_j)`.
    pub fn flux(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * g[0] + self.a12 * g[1],
            self.a21 * g[0] + self.a22 * g[1],
        ]
    }
}

/// One coefficient matrix per open quadrant.
///
/// On the axes the matrix of [`Quadrant::locate`] is used, the same
/// tie-break as field evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadrantCoefficients {
    /// Indexed by [`Quadrant::index`].
    pub quadrants: [CoeffMatrix; 4],
}

impl QuadrantCoefficients {
    pub fn uniform(a: CoeffMatrix) -> Self {
        QuadrantCoefficients { quadrants: [a; 4] }
    }

    pub fn get(&self, q: Quadrant) -> &CoeffMatrix {
        &self.quadrants[q.index()]
    }

    pub fn get_mut(&mut self, q: Quadrant) -> &mut CoeffMatrix {
        &mut self.quadrants[q.index()]
    }

    /// Matrix used at `x`, and whether `x` is on an axis.
    pub fn at(&self, x: [f64; 2]) -> (&CoeffMatrix, bool) {
        let (q, on_axis) = Quadrant::locate(x);
        (self.get(q), on_axis)
    }

    pub fn map(&self, f: impl Fn(Quadrant, &CoeffMatrix) -> CoeffMatrix) -> Self {
        let mut out = *self;
        for q in Quadrant::ALL {
            out.quadrants[q.index()] = f(q, self.get(q));
        }
        out
    }

    /// Whether `a11` and `a22` take the same value in every quadrant.
    pub fn diagonals_constant(&self) -> bool {
        let a = &self.quadrants[0];
        self.quadrants
            .iter()
            .all(|m| m.a11 == a.a11 && m.a22 == a.a22)
    }
}

/// `A = [1, -cot omega; 0, 1]`, mapping the sector of opening `omega` onto
/// the first quadrant with `det A = 1`.
pub fn shear_matrix(omega: f64) -> Result<Mat2> {
    if !(omega > 0.0 && omega < PI) {
        return Err(invalid("omega", omega, "must lie in (0, pi)"));
    }
    Ok(Mat2::new(1.0, -cot(omega), 0.0, 1.0))
}

/// `cot` with the exact zero at `pi/2`.
fn cot(t: f64) -> f64 {
    if t == std::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        t.cos() / t.sin()
    }
}

/// `a = A A^T`, so that `a^{ij} D_ij (v o A^-1) = (Delta v) o A^-1`.
pub fn pushforward_coefficients(a: &Mat2) -> Result<CoeffMatrix> {
    if a.inverse().is_none() {
        return Err(CxError::SingularMatrix { det: a.det() });
    }
    let m = &a.0;
    let a11 = m[0][0] * m[0][0] + m[0][1] * m[0][1];
    let a12 = m[0][0] * m[1][0] + m[0][1] * m[1][1];
    let a22 = m[1][0] * m[1][0] + m[1][1] * m[1][1];
    Ok(CoeffMatrix::new(a11, a12, a12, a22))
}

/// Extension of constant coefficients by odd reflections in both axes:
/// the off-diagonals pick up `sign(x1) sign(x2)`, the diagonals are kept.
pub fn quadrant_coefficients(a: CoeffMatrix) -> Result<QuadrantCoefficients> {
    let (lo, _) = a.symmetric_eigenvalues();
    if !(lo > 0.0) {
        return Err(CxError::NonElliptic { delta: lo });
    }
    Ok(QuadrantCoefficients::uniform(a).map(|q, m| {
        let (s1, s2) = q.signs();
        CoeffMatrix::new(m.a11, s1 * s2 * m.a12, s1 * s2 * m.a21, m.a22)
    }))
}

/// `a^{ij}(x) D_ij field(x)` and whether `x` is on an interface.
pub fn apply_nondiv(
    coeffs: &QuadrantCoefficients,
    field: &ScalarField,
    x: [f64; 2],
) -> Result<(f64, bool)> {
    let jet = field.eval_jet(x)?;
    let (a, on_axis) = coeffs.at(x);
    Ok((a.contract(&jet.hessian), on_axis || jet.on_interface))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ellipticity {
    /// Smallest eigenvalue of the symmetric parts over all quadrants.
    pub delta: f64,
    pub max_entry: f64,
    /// `max |a^{ij}| <= 1 / delta`.
    pub entry_bound_holds: bool,
}

pub fn ellipticity_constant(coeffs: &QuadrantCoefficients) -> Result<Ellipticity> {
    let delta = coeffs
        .quadrants
        .iter()
        .map(|m| m.symmetric_eigenvalues().0)
        .fold(f64::INFINITY, f64::min);
    if !(delta > 0.0) {
        return Err(CxError::NonElliptic { delta });
    }
    let max_entry = coeffs
        .quadrants
        .iter()
        .map(CoeffMatrix::max_abs_entry)
        .fold(0.0, f64::max);
    Ok(Ellipticity {
        delta,
        max_entry,
        entry_bound_holds: max_entry <= 1.0 / delta,
    })
}

/// Right-hand side `D_i g_i + f` of a divergence-form equation.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub g: [ScalarField; 2],
    pub f: ScalarField,
}

impl Rhs {
    pub fn zero() -> Self {
        Rhs {
            g: [ScalarField::zero(), ScalarField::zero()],
            f: ScalarField::zero(),
        }
    }

    pub fn source(f: ScalarField) -> Self {
        Rhs {
            g: [ScalarField::zero(), ScalarField::zero()],
            f,
        }
    }

    pub fn divergence(g: [ScalarField; 2]) -> Self {
        Rhs {
            g,
            f: ScalarField::zero(),
        }
    }
}

/// `exp(1 - 1/(1 - |x - c|^2 / rho^2))`, unit at the centre, supported in the
/// closed disk of radius `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BumpTestFunction {
    pub center: [f64; 2],
    pub radius: f64,
}

impl BumpTestFunction {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", radius, "must be positive and finite"));
        }
        if !(center[0].is_finite() && center[1].is_finite()) {
            return Err(CxError::NonFinite { point: center });
        }
        Ok(BumpTestFunction { center, radius })
    }

    pub fn field(&self) -> ScalarField {
        ScalarField::bump(self.center, self.radius)
    }

    /// Draw a bump with centre uniform in `|c| < center_radius` and radius
    /// uniform in `radius_range`.
    pub fn sample<R: Rng>(rng: &mut R, center_radius: f64, radius_range: (f64, f64)) -> Self {
        let r = center_radius * rng.gen::<f64>().sqrt();
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = rng.gen_range(radius_range.0..radius_range.1);
        BumpTestFunction {
            center: [r * t.cos(), r * t.sin()],
            radius: rho,
        }
    }

    /// Polar integration domain covering the support, split on the axes.
    pub fn domain(&self) -> Result<Domain2D> {
        let dist = self.center[0].hypot(self.center[1]);
        let outer = dist + self.radius;
        let d = if dist <= self.radius * (1.0 + 1e-12) {
            Domain2D::disk(outer)?
        } else {
            let half = (self.radius / dist).asin();
            let mid = self.center[1].atan2(self.center[0]);
            Domain2D::sector(dist - self.radius, outer, mid - half, mid + half)?.with_axis_breaks()
        };
        Ok(d)
    }
}

/// `R = integral(a^{ij} D_j u D_i phi - g_i D_i phi + f phi)`, which vanishes
/// exactly when `D_i(a^{ij} D_j u) = D_i g_i + f` holds weakly against `phi`.
pub fn weak_residual(
    coeffs: &QuadrantCoefficients,
    u: &ScalarField,
    rhs: &Rhs,
    test: &BumpTestFunction,
    tol: f64,
) -> Result<QuadratureResult> {
    let phi = test.field();
    let mut domain = test.domain()?;
    for field in [u, &rhs.g[0], &rhs.g[1], &rhs.f] {
        domain = domain.with_angular_breaks(field.singular_set().rays);
    }
    let integrand = |x: [f64; 2]| -> f64 {
        let eval = || -> Result<f64> {
            let pj = phi.eval_jet(x)?;
            if pj.value == 0.0 && pj.gradient == [0.0, 0.0] {
                return Ok(0.0);
            }
            let du = u.eval_jet(x)?.gradient;
            let (a, _) = coeffs.at(x);
            let flux = a.flux(du);
            let g = [rhs.g[0].value(x)?, rhs.g[1].value(x)?];
            let f = rhs.f.value(x)?;
            let dphi = pj.gradient;
            Ok((flux[0] - g[0]) * dphi[0] + (flux[1] - g[1]) * dphi[1] + f * pj.value)
        };
        eval().unwrap_or(f64::NAN)
    };
    Ok(integrate(integrand, &domain, tol)?)
}
