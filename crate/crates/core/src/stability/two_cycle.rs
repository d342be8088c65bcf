//! Two-cycles of the deterministic controlled map and the threshold gain `β_*`
//! above which none remain in the trap interval.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::search::{golden_min, open_grid, GRID};
use crate::maps::{MapProbe, MapSpec};
use crate::scalar::{lit, Real};

/// Worst point of the two-cycle margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Margin<T> {
    /// `min` of `G²(β,x) − x` on `(f²_m, K)` and `x − G²(β,x)` on `(K, f_m)`.
    pub value: T,
    pub at: T,
}

/// Positive iff `G²(β, ·)` pushes every point of the trap towards `K` at grid resolution.
pub fn two_cycle_margin<T: Real>(map: &MapSpec<T>, probe: &MapProbe<T>, beta: T) -> Margin<T> {
    let k = probe.k;
    let gap = |x: T| {
        let d = map.controlled2(beta, x) - x;
        if x < k {
            d
        } else {
            -d
        }
    };
    let half = GRID / 2;
    let mut worst = Margin {
        value: T::infinity(),
        at: k,
    };
    let mut cell = None;
    for (lo, hi) in [(probe.f2_m, k), (k, probe.f_m)] {
        let pts: Vec<T> = open_grid(lo, hi, half).collect();
        for (i, &x) in pts.iter().enumerate() {
            let v = gap(x);
            if v < worst.value {
                worst = Margin { value: v, at: x };
                let a = if i == 0 { lo } else { pts[i - 1] };
                let b = if i + 1 == pts.len() { hi } else { pts[i + 1] };
                cell = Some((a, b));
            }
        }
    }
    if let Some((a, b)) = cell {
        let tol = lit::<T>(1e-12) * T::one().max(k);
        let (x, v) = golden_min(gap, a, b, tol);
        if v < worst.value && x != k {
            worst = Margin { value: v, at: x };
        }
    }
    worst
}

/// How `β_*` was located.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaStarMode {
    Bisection,
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaStar<T> {
    pub value: T,
    pub mode: BetaStarMode,
    pub tolerance: T,
}

/// `β_* = inf{β : margin(β) > 0}` by bisection on `[0, 0.99]` to `1e-4`.
pub fn beta_star<T: Real>(map: &MapSpec<T>, probe: &MapProbe<T>) -> Result<BetaStar<T>> {
    beta_star_with(map, probe, lit(1e-4))
}

pub fn beta_star_with<T: Real>(
    map: &MapSpec<T>,
    probe: &MapProbe<T>,
    tol: T,
) -> Result<BetaStar<T>> {
    let inside = |b: T| two_cycle_margin(map, probe, b).value > T::zero();
    let (mut lo, mut hi) = (T::zero(), lit::<T>(0.99));
    if inside(lo) {
        return Ok(BetaStar {
            value: lo,
            mode: BetaStarMode::Bisection,
            tolerance: tol,
        });
    }
    if !inside(hi) {
        return Err(Error::Structure(format!(
            "two-cycle margin is not positive even at β = 0.99 ({})",
            two_cycle_margin(map, probe, hi)
                .value
                .to_f64()
                .unwrap_or(f64::NAN)
        )));
    }
    while hi - lo > tol {
        let mid = (lo + hi) * lit(0.5);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BetaStar {
        value: hi,
        mode: BetaStarMode::Bisection,
        tolerance: tol,
    })
}

/// Fallback without the monotonicity assumption: the smallest grid gain from
/// which the margin stays positive up to `0.99`.
pub fn beta_star_scan<T: Real>(
    map: &MapSpec<T>,
    probe: &MapProbe<T>,
    step: T,
) -> Result<BetaStar<T>> {
    let n = (lit::<T>(0.99) / step).floor().to_usize().unwrap_or(0);
    let mut first_good = None;
    for i in (0..=n).rev() {
        let b = step * T::from_usize(i).unwrap();
        if two_cycle_margin(map, probe, b).value > T::zero() {
            first_good = Some(b);
        } else {
            break;
        }
    }
    first_good
        .map(|value| BetaStar {
            value,
            mode: BetaStarMode::Scan,
            tolerance: step,
        })
        .ok_or_else(|| Error::Structure("two-cycle margin is not positive near β = 0.99".into()))
}

/// A point `x` with `G²(β, x) = x`, `G(β, x) ≠ x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoCycle<T> {
    pub x: T,
    pub y: T,
    pub residual: T,
}

/// Locates a two-cycle on `(f²_m, K)` by bracketing sign changes of `G²(β,x) − x`.
pub fn two_cycle_witness<T: Real>(
    map: &MapSpec<T>,
    probe: &MapProbe<T>,
    beta: T,
) -> Option<TwoCycle<T>> {
    let k = probe.k;
    let h = |x: T| map.controlled2(beta, x) - x;
    let pts: Vec<T> = open_grid(probe.f2_m, k, GRID).collect();
    let sep = (k - probe.f2_m) * lit(1e-6);
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ha, hb) = (h(a), h(b));
        if ha == T::zero() && k - a > sep {
            return witness(map, beta, a);
        }
        if (ha < T::zero()) == (hb < T::zero()) {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        let neg_lo = ha < T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if (h(mid) < T::zero()) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = if h(lo).abs() <= h(hi).abs() { lo } else { hi };
        if k - x > sep {
            if let Some(c) = witness(map, beta, x) {
                return Some(c);
            }
        }
    }
    None
}

fn witness<T: Real>(map: &MapSpec<T>, beta: T, x: T) -> Option<TwoCycle<T>> {
    let y = map.controlled(beta, x);
    let residual = (map.controlled(beta, y) - x).abs();
    let scale = T::one().max(x.abs());
    if residual <= lit::<T>(1e-8) * scale && (y - x).abs() > lit::<T>(1e-6) * scale {
        Some(TwoCycle { x, y, residual })
    } else {
        None
    }
}
