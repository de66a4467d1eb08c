//! Truncated bivariate Taylor polynomials.
//!
//! A [`Jet`] of order `k` at a point `x0` stores the scaled coefficients
//! `c[i][j] = D1^i D2^j f(x0) / (i! j!)` for `i + j <= k`, so that
//! `f(x0 + h) = sum c[i][j] h1^i h2^j + O(|h|^(k+1))`. Products, univariate
//! compositions, linear substitutions and reflections are exact operations on
//! these coefficients, which is how every field in the crate gets its
//! derivatives.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: usize = 6;

const CAP: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[inline]
const fn idx(i: usize, j: usize) -> usize {
    let k = i + j;
    k * (k + 1) / 2 + j
}

const FACTORIAL: [f64; MAX_ORDER + 2] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; CAP],
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Jet { order, c: [0.0; CAP] }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Jet::zero(order);
        j.c[0] = value;
        j
    }

    /// The coordinate function `x_axis` expanded at `x0`.
    pub fn coordinate(axis: usize, x0: [f64; 2], order: usize) -> Self {
        let mut j = Jet::constant(x0[axis], order);
        if order >= 1 {
            j.c[if axis == 0 { idx(1, 0) } else { idx(0, 1) }] = 1.0;
        }
        j
    }

    /// Jet from value, gradient and Hessian (orders above 2 are zero).
    pub fn from_parts(value: f64, gradient: [f64; 2], hessian: [[f64; 2]; 2], order: usize) -> Self {
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            j.c[idx(1, 0)] = gradient[0];
            j.c[idx(0, 1)] = gradient[1];
        }
        if order >= 2 {
            j.c[idx(2, 0)] = 0.5 * hessian[0][0];
            j.c[idx(1, 1)] = hessian[0][1];
            j.c[idx(0, 2)] = 0.5 * hessian[1][1];
        }
        j
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Scaled Taylor coefficient of `h1^i h2^j`.
    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.c[idx(i, j)]
        }
    }

    #[inline]
    pub(crate) fn set_coeff(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i + j <= self.order);
        self.c[idx(i, j)] = v;
    }

    /// The mixed partial derivative `D1^i D2^j f(x0)`.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * FACTORIAL[i] * FACTORIAL[j]
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.coeff(1, 0), self.coeff(0, 1)]
    }

    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let h11 = 2.0 * self.coeff(2, 0);
        let h12 = self.coeff(1, 1);
        let h22 = 2.0 * self.coeff(0, 2);
        [[h11, h12], [h12, h22]]
    }

    pub fn is_finite(&self) -> bool {
        self.c[..len(self.order)].iter().all(|v| v.is_finite())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        let mut out = Jet::zero(order);
        out.c[..len(order)].copy_from_slice(&self.c[..len(order)]);
        out
    }

    pub fn scale(&self, k: f64) -> Jet {
        let mut out = *self;
        for v in out.c[..len(self.order)].iter_mut() {
            *v *= k;
        }
        out
    }

    /// `D_axis f` as a jet of one lower order.
    pub fn partial(&self, axis: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut out = Jet::zero(order);
        for k in 0..=order {
            for j in 0..=k {
                let i = k - j;
                out.c[idx(i, j)] = if axis == 0 {
                    (i + 1) as f64 * self.c[idx(i + 1, j)]
                } else {
                    (j + 1) as f64 * self.c[idx(i, j + 1)]
                };
            }
        }
        out
    }

    /// Jet of `x -> f(sigma(x))` where `sigma` negates coordinate `axis`,
    /// given the jet of `f` at `sigma(x0)`.
    pub fn mirror(&self, axis: usize) -> Jet {
        let mut out = *self;
        for k in 0..=self.order {
            for j in 0..=k {
                let i = k - j;
                let power = if axis == 0 { i } else { j };
                if power % 2 == 1 {
                    out.c[idx(i, j)] = -out.c[idx(i, j)];
                }
            }
        }
        out
    }

    /// Jet of `x -> f(m x)` at `x0`, given the jet of `f` at `m x0`.
    pub fn substitute_linear(&self, m: [[f64; 2]; 2]) -> Jet {
        let order = self.order;
        // dy1 = m11 h1 + m12 h2, dy2 = m21 h1 + m22 h2, as homogeneous linear jets
        let mut l1 = Jet::zero(order);
        let mut l2 = Jet::zero(order);
        if order >= 1 {
            l1.c[idx(1, 0)] = m[0][0];
            l1.c[idx(0, 1)] = m[0][1];
            l2.c[idx(1, 0)] = m[1][0];
            l2.c[idx(0, 1)] = m[1][1];
        }
        let mut pow1 = Vec::with_capacity(order + 1);
        let mut pow2 = Vec::with_capacity(order + 1);
        pow1.push(Jet::constant(1.0, order));
        pow2.push(Jet::constant(1.0, order));
        for k in 1..=order {
            pow1.push(pow1[k - 1] * l1);
            pow2.push(pow2[k - 1] * l2);
        }
        let mut out = Jet::zero(order);
        for k in 0..=order {
            for j in 0..=k {
                let i = k - j;
                let c = self.c[idx(i, j)];
                if c != 0.0 {
                    out = out + (pow1[i] * pow2[j]).scale(c);
                }
            }
        }
        out
    }

    /// Composition `g(f)` given `taylor[k] = g^(k)(f(x0)) / k!` for `k <= order`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let order = self.order;
        assert!(taylor.len() > order, "need {} Taylor coefficients", order + 1);
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Jet::constant(taylor[order], order);
        for k in (0..order).rev() {
            out = out * delta;
            out.c[0] += taylor[k];
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let inv = 1.0 / a;
        let mut t = [0.0; MAX_ORDER + 1];
        let mut term = inv;
        for slot in t.iter_mut().take(self.order + 1) {
            *slot = term;
            term *= -inv;
        }
        self.compose(&t)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut t = [0.0; MAX_ORDER + 1];
        for (k, slot) in t.iter_mut().enumerate().take(self.order + 1) {
            *slot = e / FACTORIAL[k];
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        let s = a.sqrt();
        // binomial(1/2, k) a^(1/2 - k)
        let mut t = [0.0; MAX_ORDER + 1];
        let mut binom = 1.0;
        let mut power = s;
        for (k, slot) in t.iter_mut().enumerate().take(self.order + 1) {
            *slot = binom * power;
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
            power /= a;
        }
        self.compose(&t)
    }
}

#[inline]
const fn len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

impl Add for Jet {
    type Output = Jet;

    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for n in 0..len(order) {
            out.c[n] = self.c[n] + rhs.c[n];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;

    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;

    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;

    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;

    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul for Jet {
    type Output = Jet;

    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for k1 in 0..=order {
            for j1 in 0..=k1 {
                let a = self.c[idx(k1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for k2 in 0..=(order - k1) {
                    for j2 in 0..=k2 {
                        let b = rhs.c[idx(k2 - j2, j2)];
                        out.c[idx(k1 - j1 + k2 - j2, j1 + j2)] += a * b;
                    }
                }
            }
        }
        out
    }
}
