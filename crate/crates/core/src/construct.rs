//! Assembly of the counterexample instances and the blow-up study.
//!
//! The non-divergence pipeline is
//! corner harmonic -> cutoff -> shear -> odd reflection in `x2` -> odd
//! reflection in `x1`; the divergence instance differentiates its solution in
//! `x2` and rewires the coefficients; the four-sector instance takes its
//! solution from [`ps_profile`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fields::{
    omega_for_p, ps_profile, truncated_corner, CornerParams, PsParams, PsProfile, ScalarField,
};
use crate::geom::{Axis, Mat2, Parity, Quadrant};
use crate::operators::{
    ellipticity_constant, pushforward_coefficients, quadrant_coefficients, shear_matrix,
    CoeffMatrix, QuadrantCoefficients, Rhs,
};
use crate::quadrature::{
    compensated_sum, lp_norm, Domain2D, JetKind, LpNorm, QuadratureError, QuadratureResult,
};

/// How far along the reflection pipeline a non-divergence instance goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// On the first quadrant, right after the shear.
    Quadrant,
    /// On the right half-plane `{x1 > 0}`, after the reflection in `x2`.
    Half,
    /// On the whole plane.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    NondivQuadrant,
    NondivHalfPlane,
    NondivFullPlane,
    DivFullPlane,
    Ps,
}

/// Where an instance's equation holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceDomain {
    Quadrant,
    RightHalfPlane,
    Plane,
    Ball { radius: f64 },
}

impl InstanceDomain {
    /// Open quadrants meeting the domain.
    pub fn quadrants(&self) -> &'static [Quadrant] {
        match self {
            InstanceDomain::Quadrant => &[Quadrant::I],
            InstanceDomain::RightHalfPlane => &[Quadrant::I, Quadrant::IV],
            InstanceDomain::Plane | InstanceDomain::Ball { .. } => &Quadrant::ALL,
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        match self {
            InstanceDomain::Quadrant => x[0] > 0.0 && x[1] > 0.0,
            InstanceDomain::RightHalfPlane => x[0] > 0.0,
            InstanceDomain::Plane => true,
            InstanceDomain::Ball { radius } => x[0].hypot(x[1]) < *radius,
        }
    }
}

/// Parameters and intermediate objects an instance was built from.
#[derive(Clone, Debug)]
pub enum InstanceParams {
    Corner {
        /// `p` for non-divergence instances, `q` for the divergence one.
        p: f64,
        n: u32,
        corner: CornerParams,
        shear: Mat2,
        /// `A A^T` before reflection.
        pushforward: CoeffMatrix,
    },
    Ps {
        profile: PsProfile,
        radius: f64,
    },
}

/// Serializable summary of an instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceMetadata {
    pub kind: InstanceKind,
    pub domain: InstanceDomain,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ps: Option<PsParams>,
    pub delta: f64,
    pub coefficients: QuadrantCoefficients,
    pub stages: Vec<&'static str>,
    pub solution: String,
}

/// Coefficients, solution and right-hand side of one construction.
#[derive(Clone, Debug)]
pub struct CounterexampleInstance {
    pub kind: InstanceKind,
    pub domain: InstanceDomain,
    pub params: InstanceParams,
    pub coefficients: QuadrantCoefficients,
    pub solution: ScalarField,
    pub rhs: Rhs,
    /// Steps of the pipeline, in order.
    pub stages: Vec<&'static str>,
    pub delta: f64,
}

impl CounterexampleInstance {
    pub fn metadata(&self) -> InstanceMetadata {
        let (p, n, omega, exponent, ps) = match &self.params {
            InstanceParams::Corner { p, n, corner, .. } => (
                Some(*p),
                Some(*n),
                Some(corner.omega()),
                Some(corner.exponent()),
                None,
            ),
            InstanceParams::Ps { profile, .. } => (None, None, None, None, Some(profile.params)),
        };
        InstanceMetadata {
            kind: self.kind,
            domain: self.domain,
            p,
            n,
            omega,
            exponent,
            ps,
            delta: self.delta,
            coefficients: self.coefficients,
            stages: self.stages.clone(),
            solution: self.solution.describe(),
        }
    }

    /// The same instance with different coefficients, for perturbation studies.
    pub fn with_coefficients(&self, coefficients: QuadrantCoefficients) -> Self {
        CounterexampleInstance {
            coefficients,
            ..self.clone()
        }
    }

    pub fn is_nondiv(&self) -> bool {
        matches!(
            self.kind,
            InstanceKind::NondivQuadrant | InstanceKind::NondivHalfPlane | InstanceKind::NondivFullPlane
        )
    }

    /// The non-divergence right-hand side `f`.
    pub fn source(&self) -> &ScalarField {
        &self.rhs.f
    }

    /// Scale `n` of the cutoff, if any.
    pub fn cutoff_scale(&self) -> Option<u32> {
        match self.params {
            InstanceParams::Corner { n, .. } => Some(n),
            InstanceParams::Ps { .. } => None,
        }
    }
}

/// Non-divergence instance `a^{ij} D_ij u_n = f_n` for exponent `p > 2`.
pub fn build_nondiv(p: f64, n: u32, stage: Stage) -> Result<CounterexampleInstance> {
    let corner = omega_for_p(p)?;
    let (vn, hn) = truncated_corner(&corner, n)?;
    let shear = shear_matrix(corner.omega())?;
    let a = pushforward_coefficients(&shear)?;
    let mut solution = vn.pullback(shear)?;
    let mut source = hn.pullback(shear)?;
    let mut stages = vec!["corner harmonic", "cutoff", "shear"];
    let (kind, domain, coefficients) = match stage {
        Stage::Quadrant => (
            InstanceKind::NondivQuadrant,
            InstanceDomain::Quadrant,
            QuadrantCoefficients::uniform(a),
        ),
        Stage::Half | Stage::Full => {
            solution = solution.reflect(Axis::X2, Parity::Odd);
            source = source.reflect(Axis::X2, Parity::Odd);
            stages.push("odd reflection in x2");
            if stage == Stage::Half {
                let half = QuadrantCoefficients::uniform(a).map(|q, m| {
                    let s2 = q.signs().1;
                    CoeffMatrix::new(m.a11, s2 * m.a12, s2 * m.a21, m.a22)
                });
                (InstanceKind::NondivHalfPlane, InstanceDomain::RightHalfPlane, half)
            } else {
                solution = solution.reflect(Axis::X1, Parity::Odd);
                source = source.reflect(Axis::X1, Parity::Odd);
                stages.push("odd reflection in x1");
                (
                    InstanceKind::NondivFullPlane,
                    InstanceDomain::Plane,
                    quadrant_coefficients(a)?,
                )
            }
        }
    };
    let delta = ellipticity_constant(&coefficients)?.delta;
    Ok(CounterexampleInstance {
        kind,
        domain,
        params: InstanceParams::Corner {
            p,
            n,
            corner,
            shear,
            pushforward: a,
        },
        coefficients,
        solution,
        rhs: Rhs::source(source),
        stages,
        delta,
    })
}

/// Rewire non-divergence coefficients into divergence form:
/// `a11, a22` kept, `a12 = 0`, `a21 = a12 + a21`.
pub fn rewire_for_divergence(coeffs: &QuadrantCoefficients) -> QuadrantCoefficients {
    coeffs.map(|_, m| CoeffMatrix::new(m.a11, 0.0, m.a12 + m.a21, m.a22))
}

/// Divergence instance `D_i(a^{ij} D_j v_n) = D_2 g_n` with `v_n = D_2 u_n`
/// and `g_n = f_n` from the full-plane non-divergence instance for `q`.
pub fn build_div(q: f64, n: u32) -> Result<CounterexampleInstance> {
    let base = build_nondiv(q, n, Stage::Full)?;
    let coefficients = rewire_for_divergence(&base.coefficients);
    let delta = ellipticity_constant(&coefficients)?.delta;
    let mut stages = base.stages.clone();
    stages.push("derivative in x2");
    Ok(CounterexampleInstance {
        kind: InstanceKind::DivFullPlane,
        domain: InstanceDomain::Plane,
        params: base.params,
        coefficients,
        solution: base.solution.partial(Axis::X2),
        rhs: Rhs::divergence([ScalarField::zero(), base.rhs.f]),
        stages,
        delta,
    })
}

/// Four-sector instance `D_i(a(theta) D_i u) = 0` on the ball of radius `radius`.
pub fn build_ps(theta0: f64, radius: f64) -> Result<CounterexampleInstance> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", radius, "must be positive and finite"));
    }
    let profile = ps_profile(theta0)?;
    Ok(ps_instance(profile, radius))
}

pub(crate) fn ps_instance(profile: PsProfile, radius: f64) -> CounterexampleInstance {
    let params = profile.params;
    let coefficients = QuadrantCoefficients::uniform(CoeffMatrix::IDENTITY)
        .map(|q, _| CoeffMatrix::scalar(params.coefficient(q)));
    CounterexampleInstance {
        kind: InstanceKind::Ps,
        domain: InstanceDomain::Ball { radius },
        solution: profile.field.clone(),
        params: InstanceParams::Ps { profile, radius },
        coefficients,
        rhs: Rhs::zero(),
        stages: vec!["angular profile"],
        delta: params.k.min(1.0),
    }
}

/// One line of the blow-up table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupRow {
    pub n: u32,
    pub ln_n: f64,
    /// `||v_n||_p` over the sector.
    pub lp_v: f64,
    /// `||h_n||_p` over the sector.
    pub lp_h: f64,
    /// `||D^2 v_n||_p^p` over the sector.
    pub lp_d2_pow_p: f64,
    /// Error estimate of `lp_d2_pow_p`.
    pub quad_err: f64,
    /// Error estimates of `||v_n||_p^p` and `||h_n||_p^p`.
    pub lp_v_pow_p_err: f64,
    pub lp_h_pow_p_err: f64,
    /// All three integrals met the tolerance.
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit `ys` against `xs`; `None` for fewer than two points or constant `xs`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Option<Regression> {
    let m = xs.len();
    if m < 2 || ys.len() != m {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Some(Regression {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupReport {
    pub p: f64,
    pub omega: f64,
    pub exponent: f64,
    pub tol: f64,
    /// Sorted by `n`.
    pub rows: Vec<BlowupRow>,
    /// Fit of `lp_d2_pow_p` against `ln n` over converged rows.
    pub regression: Option<Regression>,
    /// `(I(n_{k+1}) - I(n_k)) / (ln n_{k+1} - ln n_k)` over converged rows.
    pub increments: Vec<f64>,
    /// `max |increment / mean - 1|`.
    pub increment_spread: Option<f64>,
    /// Growth rate contributed by the plateau annulus, `omega (sqrt(2) a (a-1))^p`.
    pub plateau_slope: f64,
}

struct RowNorm {
    value: f64,
    pth_power: f64,
    err: f64,
    converged: bool,
}

fn row_norm(res: std::result::Result<LpNorm, QuadratureError>, p: f64) -> (RowNorm, Option<String>) {
    match res {
        Ok(l) => (
            RowNorm {
                value: l.norm,
                pth_power: l.pth_power.value,
                err: l.pth_power.error_estimate,
                converged: true,
            },
            None,
        ),
        Err(QuadratureError::NotConverged { best, .. }) => (
            RowNorm {
                value: best.value.max(0.0).powf(1.0 / p),
                pth_power: best.value,
                err: best.error_estimate,
                converged: false,
            },
            Some(format!(
                "not converged (error estimate {})",
                best.error_estimate
            )),
        ),
        Err(e) => (
            RowNorm {
                value: f64::NAN,
                pth_power: f64::NAN,
                err: f64::NAN,
                converged: false,
            },
            Some(e.to_string()),
        ),
    }
}

/// `L_p` norm over the sector, integrated separately on each cutoff regime
/// `[0, 2/n]`, `[2/n, 2]`, `[2, 3]`.
///
/// The outer band does not depend on `n`, so its contribution is the same
/// bit pattern in every row and cancels exactly in the increments even when
/// it dominates the total.
fn banded_lp_norm(
    field: &ScalarField,
    kind: JetKind,
    omega: f64,
    n: u32,
    p: f64,
    tol: f64,
) -> std::result::Result<LpNorm, QuadratureError> {
    let edges = [0.0, 2.0 / n as f64, 2.0, 3.0];
    let mut value = Vec::with_capacity(3);
    let mut err = Vec::with_capacity(3);
    let mut panels = 0;
    let mut best = None;
    for w in edges.windows(2) {
        let domain = Domain2D::sector(w[0], w[1], 0.0, omega)?;
        match lp_norm(field, kind, &domain, p, tol) {
            Ok(l) => {
                value.push(l.pth_power.value);
                err.push(l.pth_power.error_estimate);
                panels += l.pth_power.panels;
            }
            Err(QuadratureError::NotConverged { best: b, budget }) => {
                value.push(b.value);
                err.push(b.error_estimate);
                panels += b.panels;
                best = Some(budget);
            }
            Err(e) => return Err(e),
        }
    }
    let total = QuadratureResult {
        value: compensated_sum(value),
        error_estimate: compensated_sum(err),
        panels,
    };
    match best {
        Some(budget) => Err(QuadratureError::NotConverged {
            best: total,
            budget,
        }),
        None => Ok(LpNorm {
            norm: total.value.max(0.0).powf(1.0 / p),
            pth_power: total,
        }),
    }
}

fn blowup_row(corner: &CornerParams, n: u32, tol: f64) -> Result<BlowupRow> {
    let p = corner.p();
    let omega = corner.omega();
    let (vn, hn) = truncated_corner(corner, n)?;
    let (v, ev) = row_norm(banded_lp_norm(&vn, JetKind::Value, omega, n, p, tol), p);
    let (h, eh) = row_norm(banded_lp_norm(&hn, JetKind::Value, omega, n, p, tol), p);
    let (d2, ed) = row_norm(banded_lp_norm(&vn, JetKind::Hessian, omega, n, p, tol), p);
    let failures: Vec<String> = [("v_n", ev), ("h_n", eh), ("D2 v_n", ed)]
        .into_iter()
        .filter_map(|(name, e)| e.map(|e| format!("{name}: {e}")))
        .collect();
    Ok(BlowupRow {
        n,
        ln_n: (n as f64).ln(),
        lp_v: v.value,
        lp_h: h.value,
        lp_d2_pow_p: d2.pth_power,
        quad_err: d2.err,
        lp_v_pow_p_err: v.err,
        lp_h_pow_p_err: h.err,
        converged: v.converged && h.converged && d2.converged,
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

/// Norms of `v_n`, `h_n` and `D^2 v_n` over the sector for each `n`, and the
/// fit of `||D^2 v_n||_p^p` against `ln n`.
pub fn blowup_study(p: f64, n_list: &[u32], tol: f64) -> Result<BlowupReport> {
    let corner = omega_for_p(p)?;
    if n_list.len() < 2 {
        return Err(invalid("n", n_list.len() as f64, "need at least two values"));
    }
    if let Some(&bad) = n_list.iter().find(|&&n| n < 2) {
        return Err(invalid("n", bad as f64, "every n must be >= 2"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n", f64::NAN, "list must be strictly increasing"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid("tol", tol, "must be positive and finite"));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| blowup_row(&corner, n, tol))
        .collect::<Result<Vec<_>>>()?;

    let ok: Vec<&BlowupRow> = rows.iter().filter(|r| r.converged).collect();
    let xs: Vec<f64> = ok.iter().map(|r| r.ln_n).collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.lp_d2_pow_p).collect();
    let regression = linear_regression(&xs, &ys);
    let increments: Vec<f64> = ok
        .windows(2)
        .map(|w| (w[1].lp_d2_pow_p - w[0].lp_d2_pow_p) / (w[1].ln_n - w[0].ln_n))
        .collect();
    let increment_spread = (!increments.is_empty()).then(|| {
        let mean = increments.iter().sum::<f64>() / increments.len() as f64;
        increments
            .iter()
            .map(|d| (d / mean - 1.0).abs())
            .fold(0.0, f64::max)
    });
    Ok(BlowupReport {
        p,
        omega: corner.omega(),
        exponent: corner.exponent(),
        tol,
        rows,
        regression,
        increments,
        increment_spread,
        plateau_slope: corner.plateau_slope(),
    })
}
