//! Grid scans and golden-section refinement shared by the probes.

use crate::scalar::{lit, Real};

/// Default number of grid cells for extrema and Lipschitz scans.
pub const GRID: usize = 10_000;

/// `n + 1` equispaced points on `[lo, hi]`.
pub fn grid<T: Real>(lo: T, hi: T, n: usize) -> impl Iterator<Item = T> {
    let step = (hi - lo) / T::from_usize(n).unwrap();
    (0..=n).map(move |i| {
        if i == n {
            hi
        } else {
            lo + step * T::from_usize(i).unwrap()
        }
    })
}

/// Interior points of `(lo, hi)`: `n - 1` of them.
pub fn open_grid<T: Real>(lo: T, hi: T, n: usize) -> impl Iterator<Item = T> {
    grid(lo, hi, n).skip(1).take(n.saturating_sub(1))
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_max<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = lit::<T>(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let x = (a + b) * lit(0.5);
    let fx = f(x);
    // endpoints may beat the interior for kinked maxima
    [(x, fx), (c, fc), (d, fd)].into_iter().fold(
        (x, fx),
        |best, cand| if cand.1 > best.1 { cand } else { best },
    )
}

pub fn golden_min<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> (T, T) {
    let (x, v) = golden_max(|x| -f(x), a, b, tol);
    (x, -v)
}

/// Grid maximum of `f` over `pts`, ties resolved toward the largest abscissa,
/// then refined by golden section inside the neighbouring cells.
pub fn refined_max<T: Real>(
    f: impl Fn(T) -> T + Copy,
    lo: T,
    hi: T,
    n: usize,
    open: bool,
) -> (T, T) {
    let pts: Vec<T> = if open {
        open_grid(lo, hi, n).collect()
    } else {
        grid(lo, hi, n).collect()
    };
    let (mut j, mut best) = (0usize, T::neg_infinity());
    for (i, &x) in pts.iter().enumerate() {
        let v = f(x);
        if v >= best {
            best = v;
            j = i;
        }
    }
    let left = if j == 0 {
        if open {
            lo
        } else {
            pts[0]
        }
    } else {
        pts[j - 1]
    };
    let right = if j + 1 == pts.len() {
        if open {
            hi
        } else {
            pts[j]
        }
    } else {
        pts[j + 1]
    };
    let tol = lit::<T>(1e-10) * T::one().max(pts[j].abs());
    let (xr, vr) = golden_max(f, left, right, tol);
    let inside = if open {
        xr > lo && xr < hi
    } else {
        xr >= lo && xr <= hi
    };
    if inside && vr > best {
        (xr, vr)
    } else {
        (pts[j], best)
    }
}

pub fn refined_min<T: Real>(
    f: impl Fn(T) -> T + Copy,
    lo: T,
    hi: T,
    n: usize,
    open: bool,
) -> (T, T) {
    let (x, v) = refined_max(move |x| -f(x), lo, hi, n, open);
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_smooth_and_kinked_maxima() {
        let (x, v) = golden_max(|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && v.abs() < 1e-12);
        let (x, _) = golden_max(|x: f64| -(x - 0.7).abs(), 0.0, 1.0, 1e-12);
        assert!((x - 0.7).abs() < 1e-9);
    }

    #[test]
    fn open_grid_skips_endpoints() {
        let pts: Vec<f64> = open_grid(0.0, 1.0, 4).collect();
        assert_eq!(pts, vec![0.25, 0.5, 0.75]);
        let pts: Vec<f64> = grid(0.0, 1.0, 4).collect();
        assert_eq!(pts.len(), 5);
        assert_eq!(*pts.last().unwrap(), 1.0);
    }

    #[test]
    fn refined_max_prefers_largest_maximizer() {
        let (x, v) = refined_max(|x: f64| if x < 0.5 { x } else { 0.5 }, 0.0, 1.0, 10, false);
        assert_eq!(v, 0.5);
        assert_eq!(x, 1.0);
    }
}
