//! Adaptive polar quadrature for piecewise-smooth, power-law singular integrands.
//!
//! Domains are polar rectangles `[r_min, r_max] x [theta_min, theta_max]`
//! with mandatory radial and angular breakpoints. Each cell is integrated by
//! the tensor product of 21-point Gauss-Kronrod rules in `r` and `theta`
//! (with the Jacobian `r` folded in), and cells are bisected along whichever
//! direction carries the larger embedded-Gauss error until the total error
//! estimate meets the tolerance.
//!
//! Refinement proceeds in rounds: every cell picked for splitting in a round
//! is replaced by its two halves, the halves are evaluated (possibly in
//! parallel), and the final sum runs over cells in a fixed order with
//! compensated summation. Results are therefore bit-identical between serial
//! and parallel runs and across repeated runs.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fields::ScalarField;

/// Abscissae of the 21-point Kronrod rule on `[-1, 1]`, outermost first.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

/// Weights of the embedded 10-point Gauss rule (odd Kronrod abscissae).
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const NODES: usize = 21;

/// Full 21-point node and weight tables on `[-1, 1]`, ascending.
struct Rule {
    x: [f64; NODES],
    wk: [f64; NODES],
    wg: [f64; NODES],
}

const fn build_rule() -> Rule {
    let mut x = [0.0; NODES];
    let mut wk = [0.0; NODES];
    let mut wg = [0.0; NODES];
    let mut k = 0;
    while k < 10 {
        x[k] = -XGK[k];
        x[NODES - 1 - k] = XGK[k];
        wk[k] = WGK[k];
        wk[NODES - 1 - k] = WGK[k];
        if k % 2 == 1 {
            wg[k] = WG[k / 2];
            wg[NODES - 1 - k] = WG[k / 2];
        }
        k += 1;
    }
    x[10] = 0.0;
    wk[10] = WGK[10];
    Rule { x, wk, wg }
}

const RULE: Rule = build_rule();

/// Default cell budget of one integration.
pub const MAX_CELLS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Number of cells in the final partition.
    pub panels: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error(
        "quadrature did not converge within {budget} cells (value {}, error estimate {})",
        best.value,
        best.error_estimate
    )]
    NotConverged {
        best: QuadratureResult,
        budget: usize,
    },
    #[error("integrand is not finite at ({}, {})", point[0], point[1])]
    NonFinite { point: [f64; 2] },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
}

/// Polar rectangle with mandatory breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domain2D {
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Interior radii where panels must split, ascending.
    pub radial_breaks: Vec<f64>,
    /// Interior angles where panels must split, ascending.
    pub angular_breaks: Vec<f64>,
}

impl Domain2D {
    /// `{ r_min <= |x| <= r_max, theta_min <= arg x <= theta_max }`.
    pub fn sector(
        r_min: f64,
        r_max: f64,
        theta_min: f64,
        theta_max: f64,
    ) -> Result<Self, QuadratureError> {
        if !(r_min.is_finite() && r_max.is_finite() && r_min >= 0.0 && r_max > r_min) {
            return Err(QuadratureError::InvalidDomain(format!(
                "radial range [{r_min}, {r_max}]"
            )));
        }
        if !(theta_min.is_finite() && theta_max > theta_min && theta_max - theta_min <= TAU + 1e-12)
        {
            return Err(QuadratureError::InvalidDomain(format!(
                "angular range [{theta_min}, {theta_max}]"
            )));
        }
        Ok(Domain2D {
            r_min,
            r_max,
            theta_min,
            theta_max,
            radial_breaks: Vec::new(),
            angular_breaks: Vec::new(),
        })
    }

    /// Disk of radius `r`, split along both axes.
    pub fn disk(r: f64) -> Result<Self, QuadratureError> {
        Self::annulus(0.0, r)
    }

    /// Annulus `r_min <= |x| <= r_max`, split along both axes.
    pub fn annulus(r_min: f64, r_max: f64) -> Result<Self, QuadratureError> {
        Ok(Self::sector(r_min, r_max, 0.0, TAU)?.with_axis_breaks())
    }

    /// The part of the closed quadrant `q` inside `|x| <= r`.
    pub fn quadrant(q: crate::geom::Quadrant, r: f64) -> Result<Self, QuadratureError> {
        let (lo, hi) = q.angle_range();
        Self::sector(0.0, r, lo, hi)
    }

    /// Add the four half-axes as angular breakpoints.
    pub fn with_axis_breaks(self) -> Self {
        self.with_angular_breaks((0..4).map(|k| k as f64 * std::f64::consts::FRAC_PI_2))
    }

    /// Add radial breakpoints; those outside the open radial range are ignored.
    pub fn with_radial_breaks(mut self, radii: impl IntoIterator<Item = f64>) -> Self {
        for r in radii {
            if r > self.r_min && r < self.r_max {
                self.radial_breaks.push(r);
            }
        }
        sort_dedup(&mut self.radial_breaks);
        self
    }

    /// Add angular breakpoints, taken modulo `2pi`; those outside the open
    /// angular range are ignored.
    pub fn with_angular_breaks(mut self, angles: impl IntoIterator<Item = f64>) -> Self {
        for a in angles {
            let shifted = self.theta_min + (a - self.theta_min).rem_euclid(TAU);
            for cand in [shifted, shifted - TAU, shifted + TAU] {
                if cand > self.theta_min + 1e-13 && cand < self.theta_max - 1e-13 {
                    self.angular_breaks.push(cand);
                }
            }
        }
        sort_dedup(&mut self.angular_breaks);
        self
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.theta_max - self.theta_min) * (self.r_max.powi(2) - self.r_min.powi(2))
    }

    fn radial_edges(&self) -> Vec<f64> {
        let mut edges = vec![self.r_min];
        edges.extend(&self.radial_breaks);
        edges.push(self.r_max);
        // geometric grading toward a vertex at the origin
        if self.r_min == 0.0 {
            let b = edges[1];
            let graded: Vec<f64> = (1..=8).rev().map(|k| b * 0.5f64.powi(k)).collect();
            edges.splice(1..1, graded);
        }
        edges
    }

    fn angular_edges(&self) -> Vec<f64> {
        let mut edges = vec![self.theta_min];
        edges.extend(&self.angular_breaks);
        edges.push(self.theta_max);
        edges
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
}

/// Controls for [`integrate_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Success when `error_estimate <= tol * max(1, |value|)`.
    pub tol: f64,
    pub max_cells: usize,
    pub parallel: bool,
}

impl QuadratureOptions {
    pub fn new(tol: f64) -> Self {
        QuadratureOptions {
            tol,
            max_cells: MAX_CELLS,
            parallel: true,
        }
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
    value: f64,
    err: f64,
    err_r: f64,
    err_t: f64,
}

impl Cell {
    fn key(&self) -> (f64, f64) {
        (self.r0, self.t0)
    }

    fn splittable_r(&self) -> bool {
        let mid = 0.5 * (self.r0 + self.r1);
        mid > self.r0 && mid < self.r1 && (self.r1 - self.r0) > 1e-14 * self.r1
    }

    fn splittable_t(&self) -> bool {
        let mid = 0.5 * (self.t0 + self.t1);
        mid > self.t0 && mid < self.t1 && (self.t1 - self.t0) > 1e-14
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

fn eval_cell<F>(f: &F, r0: f64, r1: f64, t0: f64, t1: f64) -> Result<Cell, QuadratureError>
where
    F: Fn([f64; 2]) -> f64,
{
    let (rc, rh) = (0.5 * (r0 + r1), 0.5 * (r1 - r0));
    let (tc, th) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
    let mut vals = [[0.0; NODES]; NODES];
    let mut trig = [(0.0, 0.0); NODES];
    for (j, slot) in trig.iter_mut().enumerate() {
        *slot = (tc + th * RULE.x[j]).sin_cos();
    }
    for (i, row) in vals.iter_mut().enumerate() {
        let r = rc + rh * RULE.x[i];
        for (j, v) in row.iter_mut().enumerate() {
            let (s, c) = trig[j];
            let x = [r * c, r * s];
            let fx = f(x);
            if !fx.is_finite() {
                return Err(QuadratureError::NonFinite { point: x });
            }
            *v = fx * r;
        }
    }
    let jac = rh * th;
    let mut kk = 0.0;
    let mut gk_r = 0.0;
    let mut gk_t = 0.0;
    let mut resabs = 0.0;
    for i in 0..NODES {
        let mut row_k = 0.0;
        let mut row_g = 0.0;
        let mut row_abs = 0.0;
        for j in 0..NODES {
            row_k += RULE.wk[j] * vals[i][j];
            row_g += RULE.wg[j] * vals[i][j];
            row_abs += RULE.wk[j] * vals[i][j].abs();
        }
        kk += RULE.wk[i] * row_k;
        gk_r += RULE.wg[i] * row_k;
        gk_t += RULE.wk[i] * row_g;
        resabs += RULE.wk[i] * row_abs;
    }
    // mean over the reference square has weight sum 4
    let mean = 0.25 * kk;
    let mut resasc = 0.0;
    for i in 0..NODES {
        for j in 0..NODES {
            resasc += RULE.wk[i] * RULE.wk[j] * (vals[i][j] - mean).abs();
        }
    }
    let err_r = ((kk - gk_r) * jac).abs();
    let err_t = ((kk - gk_t) * jac).abs();
    let err = rescale_error(err_r + err_t, resabs * jac, resasc * jac);
    Ok(Cell {
        r0,
        r1,
        t0,
        t1,
        value: kk * jac,
        err,
        err_r,
        err_t,
    })
}

fn eval_cells<F>(
    f: &F,
    rects: &[(f64, f64, f64, f64)],
    parallel: bool,
) -> Result<Vec<Cell>, QuadratureError>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    if parallel {
        rects
            .par_iter()
            .map(|&(r0, r1, t0, t1)| eval_cell(f, r0, r1, t0, t1))
            .collect()
    } else {
        rects
            .iter()
            .map(|&(r0, r1, t0, t1)| eval_cell(f, r0, r1, t0, t1))
            .collect()
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn summarize(cells: &mut [Cell]) -> QuadratureResult {
    cells.sort_by(|a, b| {
        a.key()
            .0
            .total_cmp(&b.key().0)
            .then(a.key().1.total_cmp(&b.key().1))
    });
    QuadratureResult {
        value: compensated_sum(cells.iter().map(|c| c.value)),
        error_estimate: compensated_sum(cells.iter().map(|c| c.err)),
        panels: cells.len(),
    }
}

/// Integrate `f` over `domain` with the default options for `tol`.
pub fn integrate<F>(f: F, domain: &Domain2D, tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    integrate_with(f, domain, &QuadratureOptions::new(tol))
}

pub fn integrate_with<F>(
    f: F,
    domain: &Domain2D,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(QuadratureError::InvalidTolerance(opts.tol));
    }
    let re = domain.radial_edges();
    let te = domain.angular_edges();
    let mut rects = Vec::with_capacity((re.len() - 1) * (te.len() - 1));
    for rw in re.windows(2) {
        for tw in te.windows(2) {
            rects.push((rw[0], rw[1], tw[0], tw[1]));
        }
    }
    let mut cells = eval_cells(&f, &rects, opts.parallel)?;

    loop {
        let summary = summarize(&mut cells);
        let target = opts.tol * summary.value.abs().max(1.0);
        if summary.error_estimate <= target {
            return Ok(summary);
        }
        if cells.len() >= opts.max_cells {
            return Err(QuadratureError::NotConverged {
                best: summary,
                budget: opts.max_cells,
            });
        }

        // Split the smallest set of worst cells that could bring the total
        // below half the target; ties broken by position for determinism.
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| cells[b].err.total_cmp(&cells[a].err).then(a.cmp(&b)));
        let excess = summary.error_estimate - 0.5 * target;
        let mut picked = vec![false; cells.len()];
        let mut acc = 0.0;
        let mut any = false;
        for &k in &order {
            if acc >= excess || cells[k].err == 0.0 {
                break;
            }
            let c = &cells[k];
            if c.splittable_r() || c.splittable_t() {
                picked[k] = true;
                any = true;
            }
            acc += c.err;
        }
        if !any {
            return Err(QuadratureError::NotConverged {
                best: summary,
                budget: opts.max_cells,
            });
        }

        let mut keep = Vec::with_capacity(cells.len());
        let mut children = Vec::new();
        for (k, c) in cells.iter().enumerate() {
            if !picked[k] {
                keep.push(*c);
                continue;
            }
            let split_r = if c.splittable_r() && c.splittable_t() {
                c.err_r >= c.err_t
            } else {
                c.splittable_r()
            };
            if split_r {
                let m = 0.5 * (c.r0 + c.r1);
                children.push((c.r0, m, c.t0, c.t1));
                children.push((m, c.r1, c.t0, c.t1));
            } else {
                let m = 0.5 * (c.t0 + c.t1);
                children.push((c.r0, c.r1, c.t0, m));
                children.push((c.r0, c.r1, m, c.t1));
            }
        }
        keep.extend(eval_cells(&f, &children, opts.parallel)?);
        cells = keep;
    }
}

/// Which part of a field's jet an `L_p` norm measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JetKind {
    Value,
    /// Euclidean norm of the gradient.
    Gradient,
    /// Frobenius norm of the Hessian.
    Hessian,
}

impl JetKind {
    pub fn order(self) -> usize {
        match self {
            JetKind::Value => 0,
            JetKind::Gradient => 1,
            JetKind::Hessian => 2,
        }
    }
}

/// Magnitude of the selected jet part at `x`; NaN where evaluation fails.
pub fn jet_magnitude(field: &ScalarField, kind: JetKind, x: [f64; 2]) -> f64 {
    match field.jet(x, kind.order()) {
        Ok((jet, _)) => match kind {
            JetKind::Value => jet.value().abs(),
            JetKind::Gradient => {
                let g = jet.gradient();
                g[0].hypot(g[1])
            }
            JetKind::Hessian => {
                let h = jet.hessian();
                (h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1]).sqrt()
            }
        },
        Err(_) => f64::NAN,
    }
}

/// `||jet||_{L_p(domain)}` together with the quadrature of its `p`-th power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LpNorm {
    pub norm: f64,
    /// `integral |jet|^p` and its error estimate.
    pub pth_power: QuadratureResult,
}

/// `L_p` norm of a field's value, gradient or Hessian over `domain`.
///
/// Panels are split on the field's interface rays and switching radii.
pub fn lp_norm(
    field: &ScalarField,
    kind: JetKind,
    domain: &Domain2D,
    p: f64,
    tol: f64,
) -> Result<LpNorm, QuadratureError> {
    lp_norm_with(field, kind, domain, p, &QuadratureOptions::new(tol))
}

pub fn lp_norm_with(
    field: &ScalarField,
    kind: JetKind,
    domain: &Domain2D,
    p: f64,
    opts: &QuadratureOptions,
) -> Result<LpNorm, QuadratureError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(QuadratureError::InvalidDomain(format!(
            "exponent p = {p} must lie in (1, inf)"
        )));
    }
    let sing = field.singular_set();
    let domain = domain
        .clone()
        .with_angular_breaks(sing.rays)
        .with_radial_breaks(sing.radii);
    let res = integrate_with(
        |x| jet_magnitude(field, kind, x).powf(p),
        &domain,
        opts,
    )?;
    Ok(LpNorm {
        norm: res.value.max(0.0).powf(1.0 / p),
        pth_power: res,
    })
}
