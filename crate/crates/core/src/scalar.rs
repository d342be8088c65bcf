//! Scalar abstractions.
//!
//! Rational-function quantities (gain constants, piecewise-linear maps and
//! their two-cycles) only need field arithmetic and an order, so they are
//! written against [`Scalar`] and run unchanged on `f32`, `f64` or exact
//! rationals. Anything touching `exp`, `sin`, `ln` or `sqrt` needs [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field element: `f32`, `f64`, `Ratio<i64>`, `BigRational`, ...
pub trait Scalar: Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug {}

impl<T> Scalar for T where T: Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug
{}

/// Floating-point scalar (`f32` or `f64`).
pub trait Real: Scalar + Float + Copy + Send + Sync + 'static {}

impl<T> Real for T where T: Scalar + Float + Copy + Send + Sync + 'static {}

/// `n / d` in the scalar type.
pub fn ratio<T: Scalar>(n: i64, d: i64) -> T {
    T::from_i64(n).expect("integer literal") / T::from_i64(d).expect("integer literal")
}

/// Integer literal in the scalar type.
pub fn int<T: Scalar>(n: i64) -> T {
    T::from_i64(n).expect("integer literal")
}

/// Literal conversion for floating types.
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("float literal")
}

/// Parses a plain decimal literal (`"-1.4"`, `"68.6"`, `"3"`) exactly.
///
/// Goes through integer numerator/denominator so that rationals receive
/// `7/5` for `"1.4"` rather than the binary expansion of the nearest `f64`.
pub fn decimal<T: Scalar>(s: &str) -> Option<T> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    let ten = int::<T>(10);
    let mut value = T::zero();
    for c in whole.chars().chain(frac.chars()) {
        value = value * ten.clone() + int::<T>(i64::from(c.to_digit(10)? as u8));
    }
    for _ in 0..frac.len() {
        value = value / ten.clone();
    }
    Some(if neg { -value } else { value })
}

/// Lossy view used for diagnostics.
pub fn approx<T: Scalar>(x: &T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
