//! Scalar-generic numeric kernels shared by the parameter space and the
//! search algorithms.
//!
//! Parameter domains carry either integer or real bounds. Everything that does
//! arithmetic on those bounds (grid sampling, the finer-tuning window, the
//! relative-improvement test) is written once against [`Scalar`] and
//! instantiated for `i64` and `f64` by the callers.

use std::fmt::{Debug, Display};

use num_traits::{Num, NumCast};

/// A numeric type usable as a parameter bound.
pub trait Scalar: Num + NumCast + PartialOrd + Copy + Debug + Display + Send + Sync {
    /// `true` for integer types; window bounds are rounded inward and
    /// increments rounded to the nearest positive integer.
    const INTEGRAL: bool;

    /// Slack used when deciding whether a computed grid point coincides with
    /// the range maximum. Zero for integers.
    fn snap_tolerance(span: Self) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts from `f64`, rounding to the nearest representable value for
    /// integer types.
    fn from_f64_rounded(v: f64) -> Self {
        let v = if Self::INTEGRAL { v.round() } else { v };
        <Self as NumCast>::from(v).expect("value representable in scalar type")
    }
}

macro_rules! int_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            const INTEGRAL: bool = true;
            fn snap_tolerance(_span: Self) -> Self { 0 }
        }
    )*};
}

macro_rules! float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            const INTEGRAL: bool = false;
            fn snap_tolerance(span: Self) -> Self { span.abs() * 1e-9 }
        }
    )*};
}

int_scalar!(i32, i64, u32, u64);
float_scalar!(f32, f64);

pub fn clamp<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// Arithmetic progression `min, min+step, …` capped at `max`, with `max`
/// appended when the progression does not land on it.
///
/// Points are computed as `min + i·step` (not by repeated addition) so float
/// grids do not drift. A point within [`Scalar::snap_tolerance`] of `max` is
/// replaced by `max` itself.
pub fn sample_range<T: Scalar>(min: T, max: T, step: T) -> Vec<T> {
    assert!(min <= max, "sample_range: min > max");
    assert!(step > T::zero(), "sample_range: step must be positive");
    let tol = T::snap_tolerance(max - min);
    let mut out = Vec::new();
    let mut i = T::zero();
    loop {
        let v = min + i * step;
        if v > max - tol {
            break;
        }
        out.push(v);
        i = i + T::one();
    }
    match out.last() {
        Some(&last) if last == max => {}
        _ => out.push(max),
    }
    out
}

/// Result of [`finer_window`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinerWindow<T> {
    pub lower: T,
    pub upper: T,
    pub increment: T,
}

impl<T: Scalar> FinerWindow<T> {
    /// The window collapsed to a single point after clamping.
    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    /// Candidate values for the finer pass.
    pub fn samples(&self) -> Vec<T> {
        if self.is_point() {
            vec![self.lower]
        } else {
            sample_range(self.lower, self.upper, self.increment)
        }
    }
}

/// Re-centred sampling window for one influential parameter.
///
/// The bounds are `best ∓ old_lower/2`, clamped to `[domain_min, domain_max]`.
/// The increment is `finer_step` when given, otherwise `new_lower/2` clamped to
/// `(0, new_upper − new_lower]`. Integer scalars round the bounds inward and the
/// increment to the nearest positive integer.
pub fn finer_window<T: Scalar>(
    best: T,
    old_lower: T,
    domain_min: T,
    domain_max: T,
    finer_step: Option<T>,
) -> FinerWindow<T> {
    let best_f = best.to_f64_lossy();
    let half = old_lower.to_f64_lossy() / 2.0;
    let (mut lo, mut hi) = (best_f - half, best_f + half);
    if T::INTEGRAL {
        lo = lo.ceil();
        hi = hi.floor();
    }
    let lower = clamp(T::from_f64_rounded(lo), domain_min, domain_max);
    let upper = clamp(T::from_f64_rounded(hi), domain_min, domain_max);
    // A negative old_lower would invert the window; fall back to the point.
    let (lower, upper) = if lower > upper { (best, best) } else { (lower, upper) };
    let width = upper - lower;

    let increment = match finer_step {
        Some(step) => step,
        None => {
            let raw = lower.to_f64_lossy() / 2.0;
            let inc = T::from_f64_rounded(raw);
            if width == T::zero() {
                T::one()
            } else if inc <= T::zero() || inc > width {
                width
            } else {
                inc
            }
        }
    };
    let increment = if T::INTEGRAL && increment < T::one() { T::one() } else { increment };
    FinerWindow { lower, upper, increment }
}

/// Relative improvement `(prev − new) / prev`, floored at zero.
pub fn variation<T: Scalar>(prev_best: T, new_best: T) -> f64 {
    let prev = prev_best.to_f64_lossy();
    assert!(prev > 0.0, "variation: previous best must be positive");
    ((prev - new_best.to_f64_lossy()) / prev).max(0.0)
}
