//! Parameter types and the named fields of the constructions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use super::ScalarField;
use crate::error::{invalid, Result};
use crate::geom::{Axis, Mat2, Parity, Quadrant};

/// Opening angle of the corner sector and the harmonic exponent `pi / omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CornerParams {
    omega: f64,
    exponent: f64,
    p: f64,
}

impl CornerParams {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `pi / omega`, in `(1, 2)`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// The integrability exponent this sector was built for.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Radial power of `|D^2 v|^p r`, which is `-1` for the generating `p`.
    pub fn hessian_integrand_power(&self) -> f64 {
        self.p * (self.exponent - 2.0) + 1.0
    }

    /// Plateau growth rate of `||D^2 v_n||_p^p` per unit of `ln n`.
    ///
    /// For a harmonic `v = Im(z^a)` the Frobenius norm of the Hessian is
    /// `sqrt(2) a (a - 1) r^(a - 2)`, independent of the angle, so the plateau
    /// annulus contributes exactly `omega (sqrt(2) a (a - 1))^p ln n`.
    pub fn plateau_slope(&self) -> f64 {
        let a = self.exponent;
        self.omega * (std::f64::consts::SQRT_2 * a * (a - 1.0)).powf(self.p)
    }
}

/// `omega = pi p / (2p - 2)`, the sector on which `D^2 v` just fails to be in `L_p`.
pub fn omega_for_p(p: f64) -> Result<CornerParams> {
    if !(p.is_finite() && p > 2.0) {
        return Err(invalid("p", p, "must be finite and > 2"));
    }
    let omega = PI * p / (2.0 * p - 2.0);
    let exponent = (2.0 * p - 2.0) / p;
    Ok(CornerParams { omega, exponent, p })
}

/// `v = r^(pi/omega) sin(pi theta / omega) = Im(z^(pi/omega))` on the sector.
pub fn corner_harmonic(params: &CornerParams) -> ScalarField {
    ScalarField::polar_power(Complex64::new(1.0, 0.0), params.exponent, 0.5 * params.omega)
}

/// Scale of the radial cutoff `zeta_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CutoffParams {
    n: u32,
}

impl CutoffParams {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", n as f64, "cutoff scale must be >= 2"));
        }
        Ok(CutoffParams { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `[1/n, 2/n]`, where the cutoff rises from 0 to 1.
    pub fn inner_radii(&self) -> [f64; 2] {
        let n = self.n as f64;
        [1.0 / n, 2.0 / n]
    }

    /// `[2, 3]`, where the cutoff falls back to 0.
    pub fn outer_radii(&self) -> [f64; 2] {
        [2.0, 3.0]
    }
}

/// `zeta_n(x) = eta(n(|x| - 1/n)) eta(3 - |x|)`.
pub fn cutoff(params: &CutoffParams) -> ScalarField {
    let n = params.n as f64;
    ScalarField::radial_step(n, -1.0).product(&ScalarField::radial_step(-1.0, 3.0))
}

/// `(v_n, h_n)` with `v_n = v zeta_n` and `h_n = Delta v_n`, assembled by the
/// product rule using `Delta v = 0`.
pub fn truncated_corner(params: &CornerParams, n: u32) -> Result<(ScalarField, ScalarField)> {
    let cut = CutoffParams::new(n)?;
    let v = corner_harmonic(params);
    let zeta = cutoff(&cut);
    let vn = v.product(&zeta);
    let cross = v
        .partial(Axis::X1)
        .product(&zeta.partial(Axis::X1))
        .add(&v.partial(Axis::X2).product(&zeta.partial(Axis::X2)));
    let hn = cross.scaled(2.0).add(&v.product(&zeta.laplacian()));
    Ok((vn, hn))
}

/// Parameters of the symmetric four-sector divergence example.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsParams {
    pub theta0: f64,
    /// `(4 / pi) theta0`
    pub nu: f64,
    /// `1 / tan^2 theta0`
    pub k: f64,
}

impl PsParams {
    pub fn new(theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < FRAC_PI_2) {
            return Err(invalid("theta0", theta0, "must lie in (0, pi/2)"));
        }
        let t = theta0.tan();
        Ok(PsParams {
            theta0,
            nu: 4.0 * theta0 / PI,
            k: 1.0 / (t * t),
        })
    }

    /// Scalar coefficient on a quadrant: 1 on I and III, `K` on II and IV.
    pub fn coefficient(&self, q: Quadrant) -> f64 {
        match q {
            Quadrant::I | Quadrant::III => 1.0,
            Quadrant::II | Quadrant::IV => self.k,
        }
    }

    /// `2 / (1 - nu)` when `nu < 1`: `Du` is in `L_p` near the origin iff `p` is below it.
    pub fn integrability_threshold(&self) -> Option<f64> {
        (self.nu < 1.0).then(|| 2.0 / (1.0 - self.nu))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trig {
    Sin,
    Cos,
}

/// One angular branch `w(theta) = amplitude * trig(nu (theta - shift))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngularBranch {
    pub amplitude: f64,
    pub shift: f64,
    pub trig: Trig,
    pub nu: f64,
}

impl AngularBranch {
    pub fn w(&self, theta: f64) -> f64 {
        let (s, c) = (self.nu * (theta - self.shift)).sin_cos();
        self.amplitude
            * match self.trig {
                Trig::Sin => s,
                Trig::Cos => c,
            }
    }

    pub fn dw(&self, theta: f64) -> f64 {
        let (s, c) = (self.nu * (theta - self.shift)).sin_cos();
        self.amplitude
            * self.nu
            * match self.trig {
                Trig::Sin => c,
                Trig::Cos => -s,
            }
    }

    pub fn d2w(&self, theta: f64) -> f64 {
        -self.nu * self.nu * self.w(theta)
    }

    /// `r^nu w(theta)` as `Im(c z^nu)` on the branch centred at `shift`.
    fn field(&self) -> ScalarField {
        // sin(nu(theta - s)) r^nu = Im(e^{-i nu s} z^nu)
        // cos(nu(theta - s)) r^nu = Im(i e^{-i nu s} z^nu)
        let rot = Complex64::from_polar(1.0, -self.nu * self.shift);
        let c = match self.trig {
            Trig::Sin => rot,
            Trig::Cos => Complex64::new(0.0, 1.0) * rot,
        } * self.amplitude;
        ScalarField::polar_power(c, self.nu, self.shift)
    }
}

/// The four-branch solution `u = r^nu w(theta)` with its coefficient data.
#[derive(Clone, Debug)]
pub struct PsProfile {
    pub params: PsParams,
    pub branches: [AngularBranch; 4],
    pub field: ScalarField,
}

impl PsProfile {
    pub fn branch_fields(&self) -> [ScalarField; 4] {
        self.branches.map(|b| b.field())
    }
}

/// Build the profile for `theta0 in (0, pi/2)`.
pub fn ps_profile(theta0: f64) -> Result<PsProfile> {
    let params = PsParams::new(theta0)?;
    Ok(ps_profile_from_parts(params))
}

/// Build the profile from explicit `(nu, K)`, which need not be consistent
/// with `theta0`; perturbation studies use this to break the interface
/// conditions on purpose.
pub fn ps_profile_from_parts(params: PsParams) -> PsProfile {
    let nu = params.nu;
    let inv_sqrt_k = 1.0 / params.k.sqrt();
    let branch = |amplitude, shift, trig| AngularBranch {
        amplitude,
        shift,
        trig,
        nu,
    };
    let branches = [
        branch(1.0, FRAC_PI_4, Trig::Sin),
        branch(inv_sqrt_k, 3.0 * FRAC_PI_4, Trig::Cos),
        branch(-1.0, 5.0 * FRAC_PI_4, Trig::Sin),
        branch(-inv_sqrt_k, 7.0 * FRAC_PI_4, Trig::Cos),
    ];
    let field = ScalarField::quadrants(branches.map(|b| b.field()));
    PsProfile {
        params,
        branches,
        field,
    }
}

/// `x -> field(A^-1 x)`.
pub fn affine_pullback(field: &ScalarField, a: Mat2) -> Result<ScalarField> {
    field.pullback(a)
}

/// Extension of `field` from the positive side of `axis` with the given parity.
pub fn reflect(field: &ScalarField, axis: Axis, parity: Parity) -> ScalarField {
    field.reflect(axis, parity)
}
