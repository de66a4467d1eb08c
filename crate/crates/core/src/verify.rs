//! Certification suites for constructed instances and fields.
//!
//! Every suite returns a [`VerificationReport`] whose overall flag is the
//! conjunction of its records. Sampling is driven by a seeded ChaCha
//! generator and evaluation results are collected in draw order, so a report
//! depends only on its inputs and seed.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{
    build_div, build_nondiv, build_ps, CounterexampleInstance, InstanceDomain, InstanceParams,
    Stage,
};
use crate::error::{invalid, CxError, Result};
use crate::fields::{corner_harmonic, cutoff, omega_for_p, truncated_corner, CutoffParams, ScalarField};
use crate::geom::{distance_to_ray, Quadrant};
use crate::operators::{weak_residual, BumpTestFunction, QuadrantCoefficients};
use crate::quadrature::{integrate, lp_norm, Domain2D, JetKind};

/// Thresholds used by the suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max of `|a^{ij} D_ij u - f| / (1 + |f|)`.
    pub strong_residual: f64,
    /// Relative error of finite-difference gradients.
    pub fd_gradient: f64,
    /// Relative error of finite-difference Hessians.
    pub fd_hessian: f64,
    /// Central difference step.
    pub fd_step: f64,
    /// Relative jump of values and fluxes across interfaces.
    pub interface: f64,
    /// Quadrature tolerance for oracles and integrability partials.
    pub quadrature: f64,
    /// Quadrature tolerance for weak residuals.
    pub weak_quadrature: f64,
    /// `|R| <= weak_factor * error estimate`.
    pub weak_factor: f64,
    /// Relative size of coefficient perturbations in mutation checks.
    pub mutation: f64,
    /// Residual a perturbed instance must exceed.
    pub mutation_floor: f64,
    /// Minimum R^2 of `||D^2 v_n||_p^p` against `ln n`.
    pub blowup_r_squared: f64,
    /// Max relative spread of per-decade increments.
    pub blowup_increment_spread: f64,
    /// Max relative change of `||v_n||_p`, `||h_n||_p` between the last two scales.
    pub boundedness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            strong_residual: 1e-8,
            fd_gradient: 1e-6,
            fd_hessian: 1e-4,
            fd_step: 1e-5,
            interface: 1e-12,
            quadrature: 1e-8,
            weak_quadrature: 1e-6,
            weak_factor: 10.0,
            mutation: 0.01,
            mutation_floor: 1e-3,
            blowup_r_squared: 0.999,
            blowup_increment_spread: 0.03,
            boundedness: 0.01,
        }
    }
}

/// One measured quantity against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<[f64; 2]>,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub records: Vec<CheckRecord>,
    pub stats: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, seed: Option<u64>) -> Self {
        VerificationReport {
            suite: suite.into(),
            seed,
            records: Vec::new(),
            stats: BTreeMap::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    /// Record `measured <= threshold`.
    pub fn check_le(
        &mut self,
        check: impl Into<String>,
        location: Option<[f64; 2]>,
        measured: f64,
        threshold: f64,
    ) {
        self.push(check, location, measured, threshold, measured <= threshold);
    }

    /// Record `measured > threshold`.
    pub fn check_gt(
        &mut self,
        check: impl Into<String>,
        location: Option<[f64; 2]>,
        measured: f64,
        threshold: f64,
    ) {
        self.push(check, location, measured, threshold, measured > threshold);
    }

    fn push(
        &mut self,
        check: impl Into<String>,
        location: Option<[f64; 2]>,
        measured: f64,
        threshold: f64,
        pass: bool,
    ) {
        self.pass &= pass;
        self.records.push(CheckRecord {
            check: check.into(),
            location,
            measured,
            threshold,
            pass,
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Seed of the `k`-th sub-stream derived from `seed`.
fn substream(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Point uniform in the polar rectangle `[r0, r1] x [t0, t1]` by area.
fn polar_sample<R: Rng>(rng: &mut R, r0: f64, r1: f64, t0: f64, t1: f64) -> [f64; 2] {
    let r = (r0 * r0 + rng.gen::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
    let t = t0 + rng.gen::<f64>() * (t1 - t0);
    [r * t.cos(), r * t.sin()]
}

/// `(q, p)` quantile of a sorted slice by nearest rank.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Axis tube excluded from strong-residual sampling.
const AXIS_TUBE: f64 = 1e-9;

/// Hessian and source value at one sample point.
#[derive(Clone, Copy, Debug)]
struct StrongSample {
    x: [f64; 2],
    hessian: [[f64; 2]; 2],
    f: f64,
}

fn eval_strong(inst: &CounterexampleInstance, x: [f64; 2]) -> Result<StrongSample> {
    let jet = inst.solution.eval_jet(x)?;
    let f = inst.source().value(x)?;
    if !(f.is_finite() && jet.hessian.iter().flatten().all(|v| v.is_finite())) {
        return Err(CxError::NonFinite { point: x });
    }
    Ok(StrongSample {
        x,
        hessian: jet.hessian,
        f,
    })
}

/// Draw `samples` points split evenly over the instance's quadrants in the
/// annulus `1/(2n) < |x| < 4`, avoiding a thin tube around the axes.
fn strong_samples(
    inst: &CounterexampleInstance,
    samples: usize,
    seed: u64,
) -> (Vec<StrongSample>, usize) {
    let n = inst.cutoff_scale().unwrap_or(2) as f64;
    let (r0, r1) = (0.5 / n, 4.0);
    let quads = inst.domain.quadrants();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut redraws = 0;
    let draw = |rng: &mut ChaCha8Rng, q: Quadrant, redraws: &mut usize| loop {
        let (t0, t1) = q.angle_range();
        let x = polar_sample(rng, r0, r1, t0, t1);
        if x[0].abs() > AXIS_TUBE && x[1].abs() > AXIS_TUBE && inst.domain.contains(x) {
            return x;
        }
        *redraws += 1;
    };
    let points: Vec<(Quadrant, [f64; 2])> = (0..samples)
        .map(|k| {
            let q = quads[k % quads.len()];
            (q, draw(&mut rng, q, &mut redraws))
        })
        .collect();
    let evals: Vec<Result<StrongSample>> =
        points.par_iter().map(|&(_, x)| eval_strong(inst, x)).collect();
    let mut out = Vec::with_capacity(samples);
    for (k, e) in evals.into_iter().enumerate() {
        match e {
            Ok(s) => out.push(s),
            Err(_) => {
                let q = points[k].0;
                loop {
                    redraws += 1;
                    let x = draw(&mut rng, q, &mut redraws);
                    if let Ok(s) = eval_strong(inst, x) {
                        out.push(s);
                        break;
                    }
                }
            }
        }
    }
    (out, redraws)
}

fn strong_residuals(coeffs: &QuadrantCoefficients, samples: &[StrongSample]) -> Vec<f64> {
    samples
        .iter()
        .map(|s| {
            let (a, _) = coeffs.at(s.x);
            (a.contract(&s.hessian) - s.f).abs() / (1.0 + s.f.abs())
        })
        .collect()
}

fn max_with_location(values: &[f64], samples: &[StrongSample]) -> (f64, Option<[f64; 2]>) {
    values
        .iter()
        .zip(samples)
        .fold((0.0, None), |(m, at), (&v, s)| {
            if v > m || at.is_none() {
                (v, Some(s.x))
            } else {
                (m, at)
            }
        })
}

/// Pointwise check of `a^{ij} D_ij u = f` at random interior points.
pub fn residual_suite(
    inst: &CounterexampleInstance,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if !inst.is_nondiv() {
        return Err(CxError::WrongKind("residual suite needs a non-divergence instance"));
    }
    let mut report = VerificationReport::new("residual", Some(seed));
    let (pts, redraws) = strong_samples(inst, samples, seed);
    let res = strong_residuals(&inst.coefficients, &pts);
    let (max, at) = max_with_location(&res, &pts);
    let mut sorted = res.clone();
    sorted.sort_by(f64::total_cmp);
    report.check_le("max relative strong residual", at, max, tol.strong_residual);
    for (name, q) in [("p50", 0.5), ("p90", 0.9), ("p99", 0.99)] {
        report.stats.insert(format!("residual_{name}"), quantile(&sorted, q));
    }
    report.stats.insert("residual_max".into(), max);
    report.stats.insert("samples".into(), pts.len() as f64);
    report.stats.insert("redraws".into(), redraws as f64);
    if redraws > 0 {
        report
            .notes
            .push(format!("{redraws} sample points were re-drawn"));
    }
    Ok(report)
}

/// Perturb one coefficient entry by the relative amount `rel` (or by `rel`
/// itself when the entry is zero).
pub fn perturb_entry(
    coeffs: &QuadrantCoefficients,
    q: Quadrant,
    entry: usize,
    rel: f64,
) -> QuadrantCoefficients {
    let mut out = *coeffs;
    let m = out.get_mut(q);
    let entries = m.entries_mut();
    let e = &mut *entries[entry];
    *e = if *e == 0.0 { rel } else { *e * (1.0 + rel) };
    out
}

const ENTRY_NAMES: [&str; 4] = ["a11", "a12", "a21", "a22"];

/// The strong residual must exceed `mutation_floor` after perturbing any
/// single entry on any quadrant of the domain.
pub fn residual_mutation_suite(
    inst: &CounterexampleInstance,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if !inst.is_nondiv() {
        return Err(CxError::WrongKind("residual suite needs a non-divergence instance"));
    }
    let mut report = VerificationReport::new("residual-mutation", Some(seed));
    let (pts, _) = strong_samples(inst, samples, seed);
    for &q in inst.domain.quadrants() {
        for (k, name) in ENTRY_NAMES.iter().enumerate() {
            let mutated = perturb_entry(&inst.coefficients, q, k, tol.mutation);
            let res = strong_residuals(&mutated, &pts);
            let (max, at) = max_with_location(&res, &pts);
            report.check_gt(
                format!("{name} on quadrant {} perturbed", q.name()),
                at,
                max,
                tol.mutation_floor,
            );
        }
    }
    Ok(report)
}

/// Interface angles with the quadrants below and above each.
const INTERFACES: [(f64, Quadrant, Quadrant); 4] = [
    (0.0, Quadrant::IV, Quadrant::I),
    (FRAC_PI_2, Quadrant::I, Quadrant::II),
    (PI, Quadrant::II, Quadrant::III),
    (3.0 * FRAC_PI_2, Quadrant::III, Quadrant::IV),
];

/// Continuity of `u` and of the conormal flux across the four interface rays,
/// and the angular equation `w'' + nu^2 w = 0` on every branch.
pub fn interface_flux_suite(
    inst: &CounterexampleInstance,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let InstanceParams::Ps { profile, .. } = &inst.params else {
        return Err(CxError::WrongKind("interface suite needs a four-sector instance"));
    };
    let mut report = VerificationReport::new("interface", None);
    let branches = profile.branch_fields();
    for (angle, below, above) in INTERFACES {
        let (s, c) = angle.sin_cos();
        let normal = [-s, c];
        for r in [0.1, 1.0, 5.0] {
            let x = [r * c, r * s];
            let side = |q: Quadrant| -> Result<(f64, f64)> {
                let j = branches[q.index()].eval_jet(x)?;
                let flux = inst.coefficients.get(q).flux(j.gradient);
                Ok((j.value, flux[0] * normal[0] + flux[1] * normal[1]))
            };
            let (ua, fa) = side(below)?;
            let (ub, fb) = side(above)?;
            let tag = format!("theta={angle:.6} r={r}");
            report.check_le(
                format!("value jump {tag}"),
                Some(x),
                (ua - ub).abs(),
                tol.interface * ua.abs().max(ub.abs()),
            );
            report.check_le(
                format!("flux jump {tag}"),
                Some(x),
                (fa - fb).abs(),
                tol.interface * fa.abs().max(fb.abs()),
            );
        }
    }
    // Delta(r^nu w) = r^(nu - 2) (w'' + nu^2 w); on the unit circle the
    // Laplacian is the angular defect itself.
    let nu = profile.params.nu;
    for q in Quadrant::ALL {
        let (t0, t1) = q.angle_range();
        let b = &profile.branches[q.index()];
        let scale = nu * nu * b.amplitude.abs();
        let mut worst = (0.0, None);
        for k in 0..16 {
            let t = t0 + (t1 - t0) * (k as f64 + 0.5) / 16.0;
            let x = [t.cos(), t.sin()];
            let h = branches[q.index()].eval_jet(x)?.hessian;
            let defect = (h[0][0] + h[1][1]).abs() / scale;
            if defect >= worst.0 {
                worst = (defect, Some(x));
            }
        }
        report.check_le(
            format!("angular equation on quadrant {}", q.name()),
            worst.1,
            worst.0,
            tol.interface,
        );
    }
    Ok(report)
}

/// Weak residuals against `bumps` seeded test functions, integrated to
/// `quad_tol`. Each residual must be below `weak_factor` times its error
/// estimate and below `weak_quadrature` in absolute value.
pub fn weak_suite(
    inst: &CounterexampleInstance,
    bumps: usize,
    seed: u64,
    quad_tol: f64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let (center_radius, radius_range) = match inst.domain {
        InstanceDomain::Ball { radius } => (0.45 * radius, (0.1 * radius, 0.5 * radius)),
        _ => (2.5, (0.3, 1.5)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tests: Vec<BumpTestFunction> = (0..bumps)
        .map(|_| BumpTestFunction::sample(&mut rng, center_radius, radius_range))
        .collect();
    let results = tests
        .iter()
        .map(|b| weak_residual(&inst.coefficients, &inst.solution, &inst.rhs, b, quad_tol))
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport::new("weak", Some(seed));
    let mut max_ratio: f64 = 0.0;
    for (k, (b, r)) in tests.iter().zip(&results).enumerate() {
        report.check_le(
            format!("bump {k}: residual within {} estimates", tol.weak_factor),
            Some(b.center),
            r.value.abs(),
            tol.weak_factor * r.error_estimate,
        );
        report.check_le(
            format!("bump {k}: residual within tolerance"),
            Some(b.center),
            r.value.abs(),
            tol.weak_quadrature,
        );
        if r.error_estimate > 0.0 {
            max_ratio = max_ratio.max(r.value.abs() / r.error_estimate);
        }
    }
    report.stats.insert("quadrature_tol".into(), quad_tol);
    report.stats.insert("max_residual_over_estimate".into(), max_ratio);
    report.stats.insert(
        "max_abs_residual".into(),
        results.iter().map(|r| r.value.abs()).fold(0.0, f64::max),
    );
    Ok(report)
}

/// Fourth-order central difference of `f` at step `h`.
fn central_difference(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let near = f(h)? - f(-h)?;
    let far = f(2.0 * h)? - f(-2.0 * h)?;
    Ok((8.0 * near - far) / (12.0 * h))
}

/// Compare exact jets of `field` with central differences at `points`
/// random points of `domain` at least `1e-2` away from its singular set.
///
/// Gradients are differenced from values and Hessians from exact gradients,
/// both with the five-point stencil at step `fd_step`.
pub fn derivative_check(
    field: &ScalarField,
    domain: &Domain2D,
    points: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let sing = field.singular_set();
    let clearance = 1e-2;
    let far_enough = |x: [f64; 2]| {
        let r = x[0].hypot(x[1]);
        r >= clearance
            && (!sing.origin || r >= clearance)
            && sing.rays.iter().all(|&phi| distance_to_ray(x, phi) >= clearance)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = 0usize;
    let mut pts = Vec::with_capacity(points);
    while pts.len() < points {
        if rejected > 1000 * points.max(1) {
            return Err(invalid(
                "points",
                points as f64,
                "domain is too close to the singular set to sample",
            ));
        }
        let x = polar_sample(
            &mut rng,
            domain.r_min,
            domain.r_max,
            domain.theta_min,
            domain.theta_max,
        );
        if far_enough(x) {
            pts.push(x);
        } else {
            rejected += 1;
        }
    }
    let h = tol.fd_step;
    let errors = pts
        .par_iter()
        .map(|&x| -> Result<(f64, f64)> {
            let exact = field.eval_jet(x)?;
            let shifted = |axis: usize, t: f64| {
                let mut y = x;
                y[axis] += t;
                field.eval_jet(y)
            };
            let mut fd_grad = [0.0; 2];
            let mut fd_hess = [[0.0; 2]; 2];
            for k in 0..2 {
                fd_grad[k] = central_difference(|t| Ok(shifted(k, t)?.value), h)?;
                for (i, row) in fd_hess.iter_mut().enumerate() {
                    row[k] = central_difference(|t| Ok(shifted(k, t)?.gradient[i]), h)?;
                }
            }
            let g_norm = exact.gradient[0].abs().max(exact.gradient[1].abs());
            let h_norm = exact.hessian.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let g_err = (0..2)
                .map(|i| (fd_grad[i] - exact.gradient[i]).abs())
                .fold(0.0, f64::max);
            let h_err = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (fd_hess[i][j] - exact.hessian[i][j]).abs())
                .fold(0.0, f64::max);
            let g_den = g_norm.max(1e-4 * exact.value.abs().max(1.0));
            let h_den = h_norm.max(1e-4 * g_norm.max(1.0));
            Ok((g_err / g_den, h_err / h_den))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport::new("derivative", Some(seed));
    let worst = |sel: fn(&(f64, f64)) -> f64| {
        errors
            .iter()
            .zip(&pts)
            .fold((0.0, None), |(m, at), (e, &x)| {
                if sel(e) >= m {
                    (sel(e), Some(x))
                } else {
                    (m, at)
                }
            })
    };
    let (g, gx) = worst(|e| e.0);
    let (hh, hx) = worst(|e| e.1);
    report.check_le("gradient vs central differences", gx, g, tol.fd_gradient);
    report.check_le("hessian vs central differences", hx, hh, tol.fd_hessian);
    report.stats.insert("points".into(), points as f64);
    report.stats.insert("rejected".into(), rejected as f64);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrability {
    Finite,
    Infinite,
}

/// Exact classification of `int_0^1 r^(p alpha + 1) dr`, finite iff
/// `p alpha + 2 > 0`.
pub fn integrability_threshold(alpha: Ratio<i64>, p: Ratio<i64>) -> Result<Integrability> {
    if p <= one() {
        return Err(invalid("p", ratio_to_f64(p), "must exceed 1"));
    }
    let two = Ratio::from_integer(2);
    Ok(if p * alpha + two > Ratio::from_integer(0) {
        Integrability::Finite
    } else {
        Integrability::Infinite
    })
}

fn one() -> Ratio<i64> {
    Ratio::from_integer(1)
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// if one is within `1e-12` relative; `None` otherwise.
pub fn rational(x: f64, max_den: i64) -> Option<Ratio<i64>> {
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-12 * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > i64::MAX as f64 / 4.0 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some(Ratio::new(h1, k1));
        }
        let frac = y - a as f64;
        if frac == 0.0 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

/// Decade-by-decade partial integrals of a radial power near the origin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericIntegrability {
    /// `1e-2, 1e-3, ..., 1e-8`.
    pub epsilons: Vec<f64>,
    /// Integral over `eps < r < 1` for each epsilon.
    pub partials: Vec<f64>,
    /// Geometric mean ratio of successive decade contributions; below one
    /// the partials converge, at or above one they grow without bound.
    pub growth_ratio: f64,
    pub classification: Integrability,
}

fn classify_decades(base: f64, decades: Vec<f64>) -> NumericIntegrability {
    let epsilons: Vec<f64> = (2..=8).map(|k| 10f64.powi(-k)).collect();
    let mut partials = vec![base];
    for d in &decades {
        partials.push(partials.last().unwrap() + d);
    }
    let m = decades.len();
    let growth_ratio = (decades[m - 1] / decades[0]).powf(1.0 / (m - 1) as f64);
    NumericIntegrability {
        epsilons,
        partials,
        growth_ratio,
        classification: if growth_ratio < 1.0 {
            Integrability::Finite
        } else {
            Integrability::Infinite
        },
    }
}

/// Numeric companion of [`integrability_threshold`]: partial integrals of
/// `|x|^(p alpha)` over `eps < |x| < 1` in a unit-angle sector.
pub fn integrability_numeric(alpha: f64, p: f64, tol: f64) -> Result<NumericIntegrability> {
    if !(p > 1.0 && p.is_finite() && alpha.is_finite()) {
        return Err(invalid("p", p, "must be finite and exceed 1"));
    }
    let s = p * alpha;
    let piece = |lo: f64, hi: f64| -> Result<f64> {
        let d = Domain2D::sector(lo, hi, 0.0, 1.0)?;
        Ok(integrate(|x| x[0].hypot(x[1]).powf(s), &d, tol)?.value)
    };
    let base = piece(1e-2, 1.0)?;
    let decades = (2..8)
        .map(|k| piece(10f64.powi(-k - 1), 10f64.powi(-k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(classify_decades(base, decades))
}

/// Partial integrals of `|jet|^p` of a field over `eps < |x| < 1`.
pub fn integrability_numeric_field(
    field: &ScalarField,
    kind: JetKind,
    p: f64,
    tol: f64,
) -> Result<NumericIntegrability> {
    let piece = |lo: f64, hi: f64| -> Result<f64> {
        let d = Domain2D::annulus(lo, hi)?;
        Ok(lp_norm(field, kind, &d, p, tol)?.pth_power.value)
    };
    let base = piece(1e-2, 1.0)?;
    let decades = (2..8)
        .map(|k| piece(10f64.powi(-k - 1), 10f64.powi(-k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(classify_decades(base, decades))
}

/// Integrability of `Du` for four-sector instances on both sides of
/// `p = 2 / (1 - nu)`, exactly and numerically.
pub fn integrability_suite(
    inst: &CounterexampleInstance,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let InstanceParams::Ps { profile, .. } = &inst.params else {
        return Err(CxError::WrongKind("integrability suite needs a four-sector instance"));
    };
    let mut report = VerificationReport::new("integrability", None);
    let nu = rational(profile.params.nu, 1_000_000)
        .ok_or_else(|| invalid("nu", profile.params.nu, "not a rational with small denominator"))?;
    let alpha = nu - one();
    let probes: Vec<Ratio<i64>> = match profile.params.integrability_threshold() {
        Some(_) => {
            let threshold = Ratio::from_integer(2) / (one() - nu);
            let quarter = Ratio::new(1, 4);
            vec![threshold - quarter, threshold, threshold + quarter]
        }
        None => [2, 4, 8, 16].map(Ratio::from_integer).to_vec(),
    };
    let threshold = profile.params.integrability_threshold();
    if let Some(t) = threshold {
        report.stats.insert("threshold".into(), t);
    }
    for p in probes {
        let pf = ratio_to_f64(p);
        let exact = integrability_threshold(alpha, p)?;
        let expected = match threshold {
            Some(_) if (p * (one() - nu)) >= Ratio::from_integer(2) => Integrability::Infinite,
            _ => Integrability::Finite,
        };
        report.check_le(
            format!("exact classification at p={pf} is {expected:?}"),
            None,
            (exact != expected) as u8 as f64,
            0.0,
        );
        let on_boundary = p * alpha + Ratio::from_integer(2) == Ratio::from_integer(0);
        if on_boundary {
            continue;
        }
        let numeric = integrability_numeric_field(&inst.solution, JetKind::Gradient, pf, tol.quadrature)?;
        report.stats.insert(format!("growth_ratio_p{pf}"), numeric.growth_ratio);
        report.check_le(
            format!("numeric classification at p={pf} agrees"),
            None,
            (numeric.classification != exact) as u8 as f64,
            0.0,
        );
    }
    Ok(report)
}

/// Oracle battery for the quadrature module.
pub fn quadrature_suite(tol: &Tolerances) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("quadrature", None);
    let t = tol.quadrature;
    let mut case = |name: String, got: crate::quadrature::QuadratureResult, exact: f64| {
        let bound = t * exact.abs().max(1.0);
        report.check_le(format!("{name}: error"), None, (got.value - exact).abs(), bound);
        report.check_le(format!("{name}: estimate"), None, got.error_estimate, bound);
    };
    let span = 2.0;
    let radius: f64 = 1.5;
    for s in [-1.5, -1.0, 0.0, 1.0, 3.0] {
        let d = Domain2D::sector(0.0, radius, 0.3, 0.3 + span)?;
        let got = integrate(|x| x[0].hypot(x[1]).powf(s), &d, t)?;
        case(
            format!("r^{s} over sector"),
            got,
            span * radius.powf(s + 2.0) / (s + 2.0),
        );
    }
    let disk = Domain2D::disk(1.0)?;
    case("unit disk area".into(), integrate(|_| 1.0, &disk, t)?, PI);
    case(
        "|x|^-1 over unit disk".into(),
        integrate(|x| 1.0 / x[0].hypot(x[1]), &disk, t)?,
        TAU,
    );
    for n in [16.0, 4096.0] {
        let ann = Domain2D::annulus(2.0 / n, 2.0)?;
        case(
            format!("|x|^-2/(2pi) over annulus [2/{n}, 2]"),
            integrate(|x| 1.0 / (TAU * (x[0] * x[0] + x[1] * x[1])), &ann, t)?,
            f64::ln(n),
        );
    }
    let one = lp_norm(&ScalarField::constant(1.0), JetKind::Value, &disk, 2.0, t)?;
    report.check_le(
        "L2 norm of 1 on unit disk",
        None,
        (one.norm - PI.sqrt()).abs(),
        t * PI.sqrt(),
    );
    Ok(report)
}

/// Which suites to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Residual,
    Interface,
    Derivative,
    Quadrature,
    Weak,
    Integrability,
    All,
}

/// Exponents and scales exercised by the standard residual suite.
pub const RESIDUAL_P: [f64; 3] = [3.0, 4.0, 8.0];
pub const RESIDUAL_N: [u32; 2] = [16, 256];
pub const RESIDUAL_SAMPLES: usize = 10_000;
/// Angles of the standard four-sector instances.
pub const PS_THETA0: [(&str, f64); 3] = [("pi/6", FRAC_PI_6), ("pi/4", FRAC_PI_4), ("pi/3", FRAC_PI_3)];
pub const WEAK_BUMPS: usize = 20;
pub const FD_POINTS: usize = 100;

fn tagged(mut r: VerificationReport, tag: String) -> VerificationReport {
    r.suite = format!("{} [{tag}]", r.suite);
    r
}

/// Fields covered by the standard derivative suite, with sampling domains.
pub fn derivative_fields() -> Result<Vec<(String, ScalarField, Domain2D)>> {
    let corner = omega_for_p(4.0)?;
    let omega = corner.omega();
    let sector = Domain2D::sector(0.0, 3.5, 0.0, omega)?;
    let (vn, hn) = truncated_corner(&corner, 16)?;
    let quadrant = build_nondiv(4.0, 16, Stage::Quadrant)?;
    let full = build_nondiv(4.0, 16, Stage::Full)?;
    let div = build_div(4.0, 16)?;
    let disk = Domain2D::disk(5.0)?;
    let mut out = vec![
        ("corner harmonic p=4".to_string(), corner_harmonic(&corner), sector.clone()),
        (
            "cutoff n=16".to_string(),
            cutoff(&CutoffParams::new(16)?),
            Domain2D::disk(3.5)?,
        ),
        ("v_n p=4 n=16".to_string(), vn, sector.clone()),
        ("h_n p=4 n=16".to_string(), hn, sector),
        (
            "sheared u_n p=4 n=16".to_string(),
            quadrant.solution,
            Domain2D::quadrant(Quadrant::I, 5.0)?,
        ),
        ("full-plane u_n p=4 n=16".to_string(), full.solution, disk.clone()),
        ("full-plane f_n p=4 n=16".to_string(), full.rhs.f, disk.clone()),
        ("divergence v_n q=4 n=16".to_string(), div.solution, disk.clone()),
        (
            "bump".to_string(),
            ScalarField::bump([0.4, -0.3], 1.2),
            Domain2D::disk(2.0)?,
        ),
        (
            "linear".to_string(),
            ScalarField::linear(0.5, [2.0, -3.0]),
            Domain2D::disk(2.0)?,
        ),
    ];
    for (tag, theta0) in PS_THETA0 {
        let ps = build_ps(theta0, 2.0)?;
        out.push((format!("four-sector u theta0={tag}"), ps.solution, Domain2D::disk(2.0)?));
    }
    Ok(out)
}

/// Run a named suite in its standard configuration.
pub fn run_suite(
    name: SuiteName,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    let wants = |s: SuiteName| name == s || name == SuiteName::All;
    if wants(SuiteName::Residual) {
        for (i, &p) in RESIDUAL_P.iter().enumerate() {
            for (j, &n) in RESIDUAL_N.iter().enumerate() {
                let inst = build_nondiv(p, n, Stage::Full)?;
                let s = substream(seed, (10 * i + j) as u64);
                let tag = format!("p={p} n={n}");
                out.push(tagged(residual_suite(&inst, RESIDUAL_SAMPLES, s, tol)?, tag.clone()));
                out.push(tagged(residual_mutation_suite(&inst, RESIDUAL_SAMPLES, s, tol)?, tag));
            }
        }
    }
    if wants(SuiteName::Interface) {
        for (tag, theta0) in PS_THETA0 {
            let inst = build_ps(theta0, 5.0)?;
            out.push(tagged(interface_flux_suite(&inst, tol)?, format!("theta0={tag}")));
        }
    }
    if wants(SuiteName::Derivative) {
        for (k, (tag, field, domain)) in derivative_fields()?.into_iter().enumerate() {
            let s = substream(seed, 100 + k as u64);
            out.push(tagged(derivative_check(&field, &domain, FD_POINTS, s, tol)?, tag));
        }
    }
    if wants(SuiteName::Quadrature) {
        out.push(quadrature_suite(tol)?);
    }
    if wants(SuiteName::Weak) {
        let div = build_div(4.0, 16)?;
        out.push(tagged(
            weak_suite(&div, WEAK_BUMPS, substream(seed, 200), tol.weak_quadrature, tol)?,
            "divergence q=4 n=16".into(),
        ));
        for (k, (tag, theta0)) in PS_THETA0.iter().enumerate() {
            let inst = build_ps(*theta0, 2.0)?;
            out.push(tagged(
                weak_suite(&inst, WEAK_BUMPS, substream(seed, 201 + k as u64), tol.quadrature, tol)?,
                format!("four-sector theta0={tag}"),
            ));
        }
    }
    if wants(SuiteName::Integrability) {
        for (tag, theta0) in PS_THETA0 {
            let inst = build_ps(theta0, 2.0)?;
            out.push(tagged(integrability_suite(&inst, tol)?, format!("theta0={tag}")));
        }
        let mut exact = VerificationReport::new("integrability [corner Hessian]", None);
        for p in [3, 4, 8] {
            // alpha = pi/omega - 2 = -2/p exactly
            let alpha = Ratio::new(-2, p);
            let class = integrability_threshold(alpha, Ratio::from_integer(p))?;
            exact.check_le(
                format!("D^2 v at p={p} is not integrable"),
                None,
                (class != Integrability::Infinite) as u8 as f64,
                0.0,
            );
        }
        out.push(exact);
    }
    Ok(out)
}
