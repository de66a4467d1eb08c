//! Small planar geometry: 2x2 matrices, quadrants, axes and ray angles.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// Row-major 2x2 real matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    /// Inverse, or `None` when the determinant is zero or not finite.
    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    #[inline]
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * x[0] + m[0][1] * x[1],
            m[1][0] * x[0] + m[1][1] * x[1],
        ]
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let ata = self.transpose() * *self;
        symmetric_eigenvalues(&ata).1.max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

/// Eigenvalues `(min, max)` of the symmetric part of `m`.
pub fn symmetric_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m.get(0, 0);
    let d = m.get(1, 1);
    let b = 0.5 * (m.get(0, 1) + m.get(1, 0));
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b);
    (mean - radius, mean + radius)
}

/// Coordinate axis, named by the coordinate a reflection flips.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }
}

/// Parity of an extension across an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }
}

/// Open quadrants of the plane, counter-clockwise from the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV];

    /// Quadrant whose limit is used at `x`, and whether `x` lies on an axis.
    ///
    /// Membership is decided by the strict tests `x1 > 0` then `x2 > 0`, so a
    /// point on an axis falls into the quadrant where the failed test counts
    /// as negative: `(1, 0)` belongs to IV, `(0, 1)` to II, the origin to III.
    #[inline]
    pub fn locate(x: [f64; 2]) -> (Quadrant, bool) {
        let on_axis = x[0] == 0.0 || x[1] == 0.0;
        let q = match (x[0] > 0.0, x[1] > 0.0) {
            (true, true) => Quadrant::I,
            (false, true) => Quadrant::II,
            (false, false) => Quadrant::III,
            (true, false) => Quadrant::IV,
        };
        (q, on_axis)
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// `(sign(x1), sign(x2))` inside the quadrant.
    pub fn signs(self) -> (f64, f64) {
        match self {
            Quadrant::I => (1.0, 1.0),
            Quadrant::II => (-1.0, 1.0),
            Quadrant::III => (-1.0, -1.0),
            Quadrant::IV => (1.0, -1.0),
        }
    }

    /// Polar angle range `[lo, hi]` of the closed quadrant with `lo` in `[0, 2pi)`.
    pub fn angle_range(self) -> (f64, f64) {
        let lo = self.index() as f64 * FRAC_PI_2;
        (lo, lo + FRAC_PI_2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        }
    }
}

/// Reduce an angle into `[0, 2pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Distance from `x` to the closed ray from the origin at angle `phi`.
pub fn distance_to_ray(x: [f64; 2], phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let along = x[0] * c + x[1] * s;
    if along <= 0.0 {
        x[0].hypot(x[1])
    } else {
        (x[1] * c - x[0] * s).abs()
    }
}

/// Angle of the image of the ray at `phi` under `m`, in `[0, 2pi)`.
pub fn map_ray(m: &Mat2, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let d = m.apply([c, s]);
    normalize_angle(d[1].atan2(d[0]))
}

/// Sort angles, drop near-duplicates (within `1e-12`), and fold `2pi` onto 0.
pub fn dedup_angles(angles: &mut Vec<f64>) {
    for a in angles.iter_mut() {
        *a = normalize_angle(*a);
        if (TAU - *a) < 1e-12 {
            *a = 0.0;
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_follows_strict_positivity() {
        assert_eq!(Quadrant::locate([1.0, 2.0]), (Quadrant::I, false));
        assert_eq!(Quadrant::locate([-1.0, 2.0]), (Quadrant::II, false));
        assert_eq!(Quadrant::locate([-1.0, -2.0]), (Quadrant::III, false));
        assert_eq!(Quadrant::locate([1.0, -2.0]), (Quadrant::IV, false));
        assert_eq!(Quadrant::locate([1.0, 0.0]), (Quadrant::IV, true));
        assert_eq!(Quadrant::locate([0.0, 1.0]), (Quadrant::II, true));
        assert_eq!(Quadrant::locate([0.0, 0.0]), (Quadrant::III, true));
    }

    #[test]
    fn inverse_and_eigenvalues() {
        let m = Mat2::new(2.0, 1.0, 1.0, 3.0);
        let inv = m.inverse().unwrap();
        let id = m * inv;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.get(i, j) - want).abs() < 1e-15);
            }
        }
        let (lo, hi) = symmetric_eigenvalues(&m);
        assert!((lo + hi - 5.0).abs() < 1e-14);
        assert!((lo * hi - 5.0).abs() < 1e-13);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn ray_distance() {
        assert_eq!(distance_to_ray([3.0, 4.0], 0.0), 4.0);
        assert_eq!(distance_to_ray([-3.0, 4.0], 0.0), 5.0);
    }
}
