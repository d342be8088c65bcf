//! Exact two-cycle detection for piecewise-linear maps.
//!
//! On a pair of affine pieces `G(x) = p_i x + q_i` (x in piece i) and
//! `G(y) = p_j y + q_j` (y in piece j) a two-cycle solves
//! `x(1 − p_i p_j) = p_j q_i + q_j`; when `p_i p_j = 1` and the right side
//! vanishes every admissible `x` is on a cycle.

use crate::maps::{AffinePiece, PiecewiseLinear};
use crate::scalar::{ratio, Scalar};

/// `x ∈ [lo, hi)` over rationals, `hi = None` unbounded.
#[derive(Clone, Debug, PartialEq)]
struct Span<T> {
    lo: T,
    hi: Option<T>,
}

impl<T: Scalar> Span<T> {
    fn intersect(&self, other: &Span<T>) -> Option<Span<T>> {
        let lo = if self.lo > other.lo {
            self.lo.clone()
        } else {
            other.lo.clone()
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(if a < b { a.clone() } else { b.clone() }),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        match &hi {
            Some(h) if *h <= lo => None,
            _ => Some(Span { lo, hi }),
        }
    }

    fn contains(&self, x: &T) -> bool {
        *x >= self.lo && self.hi.as_ref().is_none_or(|h| x < h)
    }
}

/// Preimage of `target` under `x ↦ p x + q`, restricted to `dom`.
fn preimage<T: Scalar>(piece: &AffinePiece<T>, target: &Span<T>) -> Option<Span<T>> {
    let dom = Span {
        lo: piece.lo.clone(),
        hi: piece.hi.clone(),
    };
    let (p, q) = (&piece.slope, &piece.intercept);
    if p.is_zero() {
        return target.contains(q).then_some(dom);
    }
    // p x + q ∈ [lo, hi): for p > 0 → x ∈ [(lo−q)/p, (hi−q)/p); p < 0 flips (and the
    // half-open ends, which only matters on a measure-zero set we probe separately).
    let lo_x = (target.lo.clone() - q.clone()) / p.clone();
    let hi_x = target
        .hi
        .as_ref()
        .map(|h| (h.clone() - q.clone()) / p.clone());
    let span = if p.is_positive() {
        Span { lo: lo_x, hi: hi_x }
    } else {
        {
            let h = hi_x?;
            Span {
                lo: h,
                hi: Some(lo_x),
            }
        }
    };
    dom.intersect(&span)
}

/// First two-cycle `(x, G(x))` found among all piece pairs, if any.
pub fn exact_two_cycle<T: Scalar>(map: &PiecewiseLinear<T>, beta: &T) -> Option<(T, T)> {
    let pieces = map.controlled_pieces(beta);
    let on = |x: &T| pieces.iter().find(|p| p.contains(x));
    for pi in &pieces {
        for pj in &pieces {
            let a = T::one() - pi.slope.clone() * pj.slope.clone();
            let r = pj.slope.clone() * pi.intercept.clone() + pj.intercept.clone();
            if !a.is_zero() {
                let x = r / a;
                if !pi.contains(&x) {
                    continue;
                }
                let y = pi.value(&x);
                if y == x || !pj.contains(&y) {
                    continue;
                }
                if on(&y).map(|p| p.value(&y)) == Some(x.clone()) {
                    return Some((x, y));
                }
            } else if r.is_zero() {
                // every x in pi whose image lands in pj is periodic; skip the fixed point
                let target = Span {
                    lo: pj.lo.clone(),
                    hi: pj.hi.clone(),
                };
                if let Some(span) = preimage(pi, &target) {
                    let x = match &span.hi {
                        Some(h) => (span.lo.clone() + h.clone()) * ratio::<T>(1, 2),
                        None => span.lo.clone() + T::one(),
                    };
                    let y = pi.value(&x);
                    if y != x && span.contains(&x) && pj.contains(&y) {
                        return Some((x, y));
                    }
                    // the midpoint may be the fixed point; try a quarter point
                    if let Some(h) = &span.hi {
                        let x = span.lo.clone() + (h.clone() - span.lo.clone()) * ratio::<T>(1, 4);
                        let y = pi.value(&x);
                        if y != x && pj.contains(&y) {
                            return Some((x, y));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Infimum of gains without a two-cycle, by bisection over dyadic `β ∈ [0, 99/100]`
/// with `iterations` halvings. Returns `None` if `β = 99/100` still has one.
pub fn exact_beta_star<T: Scalar>(map: &PiecewiseLinear<T>, iterations: u32) -> Option<T> {
    let mut lo = T::zero();
    let mut hi = ratio::<T>(99, 100);
    if exact_two_cycle(map, &lo).is_none() {
        return Some(lo);
    }
    if exact_two_cycle(map, &hi).is_some() {
        return None;
    }
    let half = ratio::<T>(1, 2);
    for _ in 0..iterations {
        let mid = (lo.clone() + hi.clone()) * half.clone();
        if exact_two_cycle(map, &mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}
