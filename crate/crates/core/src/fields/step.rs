//! The smooth step `eta` and the bump profile, evaluated on jets.

use crate::jet::Jet;

/// Beyond this magnitude `exp(-x)` underflows together with its scaled
/// Taylor coefficients.
const UNDERFLOW: f64 = 700.0;

/// Outcome of evaluating `eta` on a jet.
pub(crate) enum Step {
    /// `eta` and all its derivatives vanish near the point.
    Zero,
    /// `eta` is identically one near the point.
    One,
    Smooth(Jet),
}

/// `eta(t) = e(t) / (e(t) + e(1 - t))` with `e(t) = exp(-1/t)` on `t > 0`.
///
/// Evaluated as the logistic function of `s = 1/(1 - t) - 1/t`, choosing the
/// form whose exponential cannot overflow, so derivatives keep their sign
/// near both ends instead of cancelling.
pub(crate) fn eta(t: Jet) -> Step {
    let t0 = t.value();
    if t0 <= 0.0 {
        return Step::Zero;
    }
    if t0 >= 1.0 {
        return Step::One;
    }
    let s = (-t + 1.0).recip() - t.recip();
    let s0 = s.value();
    if s0 < -UNDERFLOW {
        return Step::Smooth(Jet::zero(t.order()));
    }
    if s0 > UNDERFLOW {
        return Step::Smooth(Jet::constant(1.0, t.order()));
    }
    if s0 >= 0.0 {
        Step::Smooth(((-s).exp() + 1.0).recip())
    } else {
        let e = s.exp();
        Step::Smooth(e * (e + 1.0).recip())
    }
}

/// `eta(t)`, `eta'(t)`, `eta''(t)` for a scalar argument.
pub fn smooth_step(t: f64) -> [f64; 3] {
    match eta(Jet::coordinate(0, [t, 0.0], 2)) {
        Step::Zero => [0.0, 0.0, 0.0],
        Step::One => [1.0, 0.0, 0.0],
        Step::Smooth(j) => [j.value(), j.derivative(1, 0), j.derivative(2, 0)],
    }
}

/// `exp(1 - 1/(1 - s))` for `s < 1`, `None` where it is identically zero.
pub(crate) fn bump_profile(s: Jet) -> Option<Jet> {
    let gap = -s + 1.0;
    let g0 = gap.value();
    if g0 <= 0.0 || 1.0 / g0 > UNDERFLOW {
        return None;
    }
    Some((-gap.recip() + 1.0).exp())
}
