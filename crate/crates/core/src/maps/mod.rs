//! One-dimensional maps `f: [0, ∞) → [0, ∞)` with a unique unstable positive
//! equilibrium, and the structural constants the stability theory needs.

mod pwl;
pub mod search;

pub use pwl::{exglob_pwl, exnotglob_pwl, AffinePiece, Partition, PiecewiseLinear, Segment};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{approx, lit, Real};
use search::{open_grid, refined_max, refined_min, GRID};

/// Built-in maps: registry name, parameters, description.
pub const CATALOG: &[(&str, &str, &str)] = &[
    (
        "ricker",
        "r=<growth>",
        "Ricker map x·exp(r(1−x)); K = 1, f′(K) = 1 − r",
    ),
    (
        "quail",
        "",
        "bobwhite quail map x(0.55 + 3.45/(1 + x⁹)); K ≈ 1.2347",
    ),
    (
        "exglob",
        "",
        "piecewise-linear, K = 32: local gain 5/12 is already global",
    ),
    (
        "exnotglob",
        "",
        "piecewise-linear, K = 32: two-cycle survives the local gain 5/12",
    ),
    (
        "switching",
        "",
        "continuous, non-smooth and oscillating at K = 1 (L⁻ = 2, L⁺ = 1.5)",
    ),
];

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind<T> {
    Ricker { r: T },
    Quail,
    Switching,
    PiecewiseLinear(PiecewiseLinear<T>),
}

/// A named map with its parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec<T> {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub kind: MapKind<T>,
}

/// Result of the equilibrium search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equilibrium<T> {
    pub k: T,
    pub residual: T,
}

/// Derived constants of a map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapProbe<T> {
    pub k: T,
    pub x_max: T,
    pub f_m: T,
    pub f2_m: T,
    pub l_minus: T,
    pub l_plus: T,
    /// `true` when the right side turned out steeper and the labels were exchanged.
    pub swapped: bool,
    /// `-f'(K)`, only for maps smooth at `K`.
    pub l0: Option<T>,
    /// Negative Schwarzian on a grid; `None` for non-smooth maps.
    pub schwarzian_ok: Option<bool>,
}

impl<T: Real> MapProbe<T> {
    pub fn in_trap(&self, x: T) -> bool {
        x >= self.f2_m && x <= self.f_m
    }
}

fn param(params: &[(String, f64)], key: &str) -> Option<f64> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

impl<T: Real> MapSpec<T> {
    pub fn ricker(r: T) -> Result<Self> {
        if !(r > T::zero()) {
            return Err(Error::Domain(format!(
                "Ricker growth r = {} must be positive",
                approx(&r)
            )));
        }
        Ok(Self {
            name: "ricker".into(),
            params: vec![("r".into(), approx(&r))],
            kind: MapKind::Ricker { r },
        })
    }

    pub fn quail() -> Self {
        Self {
            name: "quail".into(),
            params: vec![],
            kind: MapKind::Quail,
        }
    }

    pub fn switching() -> Self {
        Self {
            name: "switching".into(),
            params: vec![],
            kind: MapKind::Switching,
        }
    }

    pub fn exglob() -> Self {
        Self::piecewise("exglob", exglob_pwl())
    }

    pub fn exnotglob() -> Self {
        Self::piecewise("exnotglob", exnotglob_pwl())
    }

    pub fn piecewise(name: &str, map: PiecewiseLinear<T>) -> Self {
        Self {
            name: name.into(),
            params: vec![],
            kind: MapKind::PiecewiseLinear(map),
        }
    }

    /// Looks a map up in the registry.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Self> {
        let known = |allowed: &[&str]| -> Result<()> {
            match params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                Some((k, _)) => Err(Error::Input(format!("map `{name}` has no parameter `{k}`"))),
                None => Ok(()),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "ricker" => {
                known(&["r"])?;
                let r = param(params, "r")
                    .ok_or_else(|| Error::Input("ricker needs r=<value>".into()))?;
                Self::ricker(lit(r))
            }
            "quail" | "bobwhite" => known(&[]).map(|_| Self::quail()),
            "exglob" => known(&[]).map(|_| Self::exglob()),
            "exnotglob" => known(&[]).map(|_| Self::exnotglob()),
            "switching" => known(&[]).map(|_| Self::switching()),
            other => Err(Error::UnknownMap(other.into())),
        }
    }

    /// Parses `"ricker r=3.5"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let name = words
            .next()
            .ok_or_else(|| Error::Input("empty map specification".into()))?;
        let params = words.map(parse_param).collect::<Result<Vec<_>>>()?;
        Self::from_name(name, &params)
    }

    /// Human-readable identifier including parameters.
    pub fn label(&self) -> String {
        let mut s = self.name.clone();
        for (k, v) in &self.params {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    pub fn eval(&self, x: T) -> Result<T> {
        if x < T::zero() || x.is_nan() {
            return Err(Error::Domain(format!(
                "x = {} is not a non-negative real",
                approx(&x)
            )));
        }
        Ok(self.f(x))
    }

    /// Evaluation without the domain check; callers guarantee `x ≥ 0`.
    #[inline]
    pub fn f(&self, x: T) -> T {
        match &self.kind {
            MapKind::Ricker { r } => x * (*r * (T::one() - x)).exp(),
            MapKind::Quail => x * (lit::<T>(0.55) + lit::<T>(3.45) / (T::one() + x.powi(9))),
            MapKind::Switching => switching(x),
            MapKind::PiecewiseLinear(p) => p.eval_unchecked(&x),
        }
    }

    /// Controlled map `G(β, x) = (1-β) f(x) + β x`.
    #[inline]
    pub fn controlled(&self, beta: T, x: T) -> T {
        (T::one() - beta) * self.f(x) + beta * x
    }

    pub fn controlled2(&self, beta: T, x: T) -> T {
        self.controlled(beta, self.controlled(beta, x))
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        matches!(
            self.kind,
            MapKind::Ricker { .. } | MapKind::Quail | MapKind::PiecewiseLinear(_)
        )
    }

    /// Whether `f` is (three times) differentiable at `x`.
    pub fn is_smooth_at(&self, x: T) -> bool {
        match &self.kind {
            MapKind::Ricker { .. } | MapKind::Quail => true,
            MapKind::Switching => {
                let w = lit::<T>(2.0 / std::f64::consts::PI);
                let one = T::one();
                x != one && x != one - w && x != one + w
            }
            MapKind::PiecewiseLinear(p) => !p.is_breakpoint(&x),
        }
    }

    /// Smooth maps with a single critical point, for which `-f'(K)` is meaningful.
    pub fn smooth_at_equilibrium(&self) -> bool {
        matches!(self.kind, MapKind::Ricker { .. } | MapKind::Quail)
    }

    /// `f'`, `f''` or `f'''` at `x`.
    pub fn derivative_at(&self, x: T, order: u8) -> Result<T> {
        if !(1..=3).contains(&order) {
            return Err(Error::Input(format!(
                "derivative order {order} not in 1..=3"
            )));
        }
        if x < T::zero() {
            return Err(Error::Domain(format!("x = {} is negative", approx(&x))));
        }
        if !self.is_smooth_at(x) {
            return Err(Error::NotSmooth(approx(&x)));
        }
        match &self.kind {
            MapKind::Ricker { r } => Ok(ricker_derivative(*r, x, order)),
            MapKind::Quail => Ok(quail_derivative(x, order)),
            MapKind::PiecewiseLinear(p) => Ok(if order == 1 {
                p.slope_at(&x)
            } else {
                T::zero()
            }),
            MapKind::Switching => Ok(self.finite_difference(x, order)),
        }
    }

    /// Central differences: `h = 1e-5·max(1,|x|)` for `f'`, `1e-4·max(1,|x|)` above.
    pub fn finite_difference(&self, x: T, order: u8) -> T {
        let scale = T::one().max(x.abs());
        let two = lit::<T>(2.0);
        match order {
            1 => {
                let h = lit::<T>(1e-5) * scale;
                (self.f(x + h) - self.f((x - h).max(T::zero()))) / (x + h - (x - h).max(T::zero()))
            }
            2 => {
                let h = lit::<T>(1e-4) * scale;
                (self.f(x + h) - two * self.f(x) + self.f(x - h)) / (h * h)
            }
            _ => {
                let h = lit::<T>(1e-4) * scale;
                (self.f(x + two * h) - two * self.f(x + h) + two * self.f(x - h)
                    - self.f(x - two * h))
                    / (two * h * h * h)
            }
        }
    }

    /// Schwarzian derivative `f'''/f' − (3/2)(f''/f')²`.
    pub fn schwarzian_at(&self, x: T) -> Result<T> {
        let d1 = self.derivative_at(x, 1)?;
        if d1.abs() <= lit(1e-8) {
            return Err(Error::Singular(approx(&x)));
        }
        let d2 = self.derivative_at(x, 2)?;
        let d3 = self.derivative_at(x, 3)?;
        let q = d2 / d1;
        Ok(d3 / d1 - lit::<T>(1.5) * q * q)
    }

    /// A bracket containing the equilibrium and no other sign change of `f(x) − x`.
    pub fn default_bracket(&self) -> (T, T) {
        match &self.kind {
            MapKind::Ricker { .. } => (lit(0.5), lit(2.0)),
            MapKind::Quail => (T::one(), lit(2.0)),
            MapKind::Switching => (lit(0.5), lit(1.5)),
            MapKind::PiecewiseLinear(p) => {
                let end = p.segments.last().expect("validated").hi;
                (end * lit(1e-6), end * lit(2.0))
            }
        }
    }

    /// Bisection on `f(x) − x`; the bracket is first scanned for extra sign changes.
    pub fn find_equilibrium(&self, bracket: (T, T)) -> Result<Equilibrium<T>> {
        let (lo, hi) = bracket;
        if !(lo >= T::zero() && hi > lo) {
            return Err(Error::Input(format!(
                "bad bracket [{}, {}]",
                approx(&lo),
                approx(&hi)
            )));
        }
        let g = |x: T| self.f(x) - x;
        let mut changes = 0usize;
        let mut prev = g(lo).signum();
        for x in search::grid(lo, hi, 1000).skip(1) {
            let s = g(x);
            if s == T::zero() {
                continue;
            }
            if s.signum() != prev && prev != T::zero() {
                changes += 1;
            }
            prev = s.signum();
        }
        if changes > 1 {
            return Err(Error::Ambiguous {
                lo: approx(&lo),
                hi: approx(&hi),
                count: changes,
            });
        }
        let (mut a, mut b) = (lo, hi);
        let (ga, gb) = (g(a), g(b));
        if ga == T::zero() {
            return Ok(Equilibrium {
                k: a,
                residual: ga.abs(),
            });
        }
        if gb == T::zero() {
            return Ok(Equilibrium {
                k: b,
                residual: gb.abs(),
            });
        }
        if ga.signum() == gb.signum() {
            return Err(Error::Bracket {
                lo: approx(&lo),
                hi: approx(&hi),
            });
        }
        let positive_left = ga > T::zero();
        for _ in 0..400 {
            let m = (a + b) * lit(0.5);
            if m <= a || m >= b {
                break;
            }
            let gm = g(m);
            if gm == T::zero() {
                a = m;
                b = m;
                break;
            }
            if (gm > T::zero()) == positive_left {
                a = m;
            } else {
                b = m;
            }
        }
        let k = if g(a).abs() <= g(b).abs() { a } else { b };
        Ok(Equilibrium {
            k,
            residual: g(k).abs(),
        })
    }

    /// `(x_max, f_m, f2_m)` given the equilibrium.
    pub fn probe_extrema(&self, k: T) -> (T, T, T) {
        let f = |x: T| self.f(x);
        let (x_max, _) = refined_max(f, T::zero(), k, GRID, false);
        let f_m = self.f(x_max);
        let (_, f2_m) = if f_m > k {
            refined_min(f, k, f_m, GRID, true)
        } else {
            (k, k)
        };
        (x_max, f_m, f2_m)
    }

    /// Supremum of `(f(x) − K)/(K − x)` on `left` and of `(K − f(x))/(x − K)` on `right`.
    pub fn estimate_lipschitz_on(&self, k: T, left: (T, T), right: (T, T)) -> Result<(T, T)> {
        let lm = refined_max(|x| (self.f(x) - k) / (k - x), left.0, left.1, GRID, true).1;
        let lp = refined_max(|x| (k - self.f(x)) / (x - k), right.0, right.1, GRID, true).1;
        if !(lm > T::zero()) || !(lp > T::zero()) {
            return Err(Error::Structure(format!(
                "one-sided constants ({}, {}) are not positive; f does not cross K",
                approx(&lm),
                approx(&lp)
            )));
        }
        Ok((lm, lp))
    }

    /// Negative Schwarzian on a grid of `(0, upper)` away from critical points.
    pub fn schwarzian_negative_on(&self, upper: T, n: usize) -> Option<bool> {
        if !self.smooth_at_equilibrium() {
            return None;
        }
        let ok = open_grid(T::zero(), upper, n).all(|x| match self.schwarzian_at(x) {
            Ok(s) => s < T::zero(),
            Err(_) => true,
        });
        Some(ok)
    }

    /// All derived constants.
    pub fn probe(&self) -> Result<MapProbe<T>> {
        let Equilibrium { k, .. } = self.find_equilibrium(self.default_bracket())?;
        self.probe_with(k)
    }

    pub fn probe_with(&self, k: T) -> Result<MapProbe<T>> {
        let (x_max, f_m, f2_m) = self.probe_extrema(k);
        if !(f2_m > T::zero() && f2_m < k && k < f_m) {
            return Err(Error::Structure(format!(
                "need 0 < f2_m < K < f_m, got f2_m = {}, K = {}, f_m = {}",
                approx(&f2_m),
                approx(&k),
                approx(&f_m)
            )));
        }
        let (mut lm, mut lp) = self.estimate_lipschitz_on(k, (x_max, k), (k, f_m))?;
        let l0 = if self.smooth_at_equilibrium() {
            Some(-self.derivative_at(k, 1)?)
        } else {
            None
        };
        if let Some(l0) = l0 {
            lm = lm.max(l0.abs());
            lp = lp.max(l0.abs());
        }
        let swapped = lm < lp;
        if swapped {
            std::mem::swap(&mut lm, &mut lp);
        }
        Ok(MapProbe {
            k,
            x_max,
            f_m,
            f2_m,
            l_minus: lm,
            l_plus: lp,
            swapped,
            l0,
            schwarzian_ok: self.schwarzian_negative_on(lit::<T>(3.0) * k, 1000),
        })
    }

    /// `(a₁, a₂)`: infima of `(f(x) − K)/(K − x)` on `(K − θ, K)` and of
    /// `(K − f(x))/(x − K)` on `(K, K + θ)`.
    pub fn side_slopes(&self, k: T, theta: T) -> (T, T) {
        let a1 = refined_min(
            |x| (self.f(x) - k) / (k - x),
            (k - theta).max(T::zero()),
            k,
            GRID,
            true,
        )
        .1;
        let a2 = refined_min(|x| (k - self.f(x)) / (x - k), k, k + theta, GRID, true).1;
        (a1, a2)
    }

    /// Piecewise-linear data, when the map is one.
    pub fn as_piecewise(&self) -> Option<&PiecewiseLinear<T>> {
        match &self.kind {
            MapKind::PiecewiseLinear(p) => Some(p),
            _ => None,
        }
    }
}

fn parse_param(word: &str) -> Result<(String, f64)> {
    let (k, v) = word
        .split_once('=')
        .ok_or_else(|| Error::Input(format!("parameter `{word}` is not key=value")))?;
    let v: f64 = v
        .parse()
        .map_err(|_| Error::Input(format!("parameter `{k}` has non-numeric value `{v}`")))?;
    Ok((k.to_string(), v))
}

fn switching<T: Real>(x: T) -> T {
    let one = T::one();
    let pi = lit::<T>(std::f64::consts::PI);
    let w = lit::<T>(2.0) / pi;
    if x <= one - w {
        (pi + lit(2.0)) / (pi - lit(2.0)) * x
    } else if x < one {
        (one - x) * (lit::<T>(1.5) + lit::<T>(0.5) * (one / (x - one)).sin()) + one
    } else if x == one {
        one
    } else if x < one + w {
        (one - x) * (lit::<T>(1.25) + lit::<T>(0.25) * (one / (x - one)).sin()) + one
    } else {
        one - lit::<T>(3.0) / pi
    }
}

fn ricker_derivative<T: Real>(r: T, x: T, order: u8) -> T {
    let e = (r * (T::one() - x)).exp();
    match order {
        1 => e * (T::one() - r * x),
        2 => r * e * (r * x - lit(2.0)),
        _ => r * r * e * (lit::<T>(3.0) - r * x),
    }
}

fn quail_derivative<T: Real>(x: T, order: u8) -> T {
    // g = 0.55 x + 3.45 h,  h = x / (1 + x⁹)
    let x9 = x.powi(9);
    let d = T::one() + x9;
    let c = lit::<T>(3.45);
    match order {
        1 => lit::<T>(0.55) + c * (T::one() - lit::<T>(8.0) * x9) / (d * d),
        2 => c * x.powi(8) * (lit::<T>(72.0) * x9 - lit(90.0)) / (d * d * d),
        _ => {
            c * x.powi(7) * (lit::<T>(-720.0) * x9 * x9 + lit::<T>(2934.0) * x9 - lit(720.0))
                / (d * d * d * d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ricker(r: f64) -> MapSpec<f64> {
        MapSpec::ricker(r).unwrap()
    }

    #[test]
    fn registry_parses_names_and_params() {
        let m = MapSpec::<f64>::parse("ricker r=3.5").unwrap();
        assert_eq!(m.kind, MapKind::Ricker { r: 3.5 });
        assert_eq!(m.label(), "ricker r=3.5");
        assert!(MapSpec::<f64>::parse("ricker").is_err());
        assert!(MapSpec::<f64>::parse("ricker r=-1").is_err());
        assert!(MapSpec::<f64>::parse("ricker q=2").is_err());
        assert!(matches!(
            MapSpec::<f64>::parse("tent"),
            Err(Error::UnknownMap(_))
        ));
        for (name, _, _) in CATALOG {
            let spec = if *name == "ricker" {
                "ricker r=3".to_string()
            } else {
                name.to_string()
            };
            assert!(MapSpec::<f64>::parse(&spec).is_ok(), "{name}");
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ricker(3.5).eval(1.0).unwrap(), 1.0);
        assert_eq!(MapSpec::<f64>::exglob().eval(32.0).unwrap(), 32.0);
        let q = MapSpec::<f64>::quail();
        let k = q.find_equilibrium((1.0, 2.0)).unwrap().k;
        assert!((q.eval(k).unwrap() - k).abs() < 1e-12);
        assert!((k - 1.2347).abs() < 1e-4);
        assert!(ricker(3.5).eval(-0.1).is_err());
        assert_eq!(MapSpec::<f64>::switching().eval(1.0).unwrap(), 1.0);
        assert_eq!(MapSpec::<f64>::switching().eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn equilibrium_search() {
        let k = ricker(3.5).find_equilibrium((0.5, 2.0)).unwrap();
        assert!((k.k - 1.0).abs() < 1e-12 && k.residual <= 1e-10);
        let k = MapSpec::<f64>::switching()
            .find_equilibrium((0.5, 1.5))
            .unwrap();
        assert!((k.k - 1.0).abs() < 1e-12);
        assert!(matches!(
            ricker(3.5).find_equilibrium((1.5, 2.0)),
            Err(Error::Bracket { .. })
        ));
        // 0 and 1 are both roots of f(x) − x on a bracket starting below 0's neighbourhood
        let wide = MapSpec::<f64>::quail().find_equilibrium((0.0, 2.0));
        assert!(wide.is_ok());
        let two_roots = MapSpec::<f64>::ricker(3.5).unwrap();
        assert!(matches!(
            two_roots.find_equilibrium_checked_for_test(),
            Err(Error::Ambiguous { .. })
        ));
    }

    impl MapSpec<f64> {
        // f(x) − x crossed against a shifted line: two sign changes on [0.1, 3].
        fn find_equilibrium_checked_for_test(&self) -> Result<Equilibrium<f64>> {
            let shifted = MapSpec::piecewise(
                "zigzag",
                PiecewiseLinear::new(
                    vec![
                        Segment {
                            lo: 0.0,
                            hi: 1.0,
                            slope: 2.0,
                            intercept: 0.0,
                        },
                        Segment {
                            lo: 1.0,
                            hi: 2.0,
                            slope: -1.0,
                            intercept: 3.0,
                        },
                        Segment {
                            lo: 2.0,
                            hi: 3.0,
                            slope: 3.0,
                            intercept: -5.0,
                        },
                    ],
                    4.0,
                )
                .unwrap(),
            );
            let _ = self;
            shifted.find_equilibrium((0.5, 2.9))
        }
    }

    #[test]
    fn ricker_probe_matches_analytic_values() {
        let p = ricker(3.5).probe().unwrap();
        assert!((p.k - 1.0).abs() < 1e-12);
        assert!((p.x_max - 1.0 / 3.5).abs() < 1e-8);
        let f_m = ricker(3.5).f(1.0 / 3.5);
        assert!((p.f_m - f_m).abs() < 1e-12);
        assert!((p.f_m - 3.4804).abs() < 1e-3);
        assert!((p.f2_m - ricker(3.5).f(f_m)).abs() < 1e-12);
        assert_eq!(ricker(3.5).f(p.x_max), p.f_m);
        assert!((p.l0.unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(p.schwarzian_ok, Some(true));
        assert!(p.l_minus >= p.l_plus && p.l_plus >= 2.5);
    }

    #[test]
    fn piecewise_probes() {
        let p = MapSpec::<f64>::exglob().probe().unwrap();
        assert!((p.k - 32.0).abs() < 1e-10);
        assert!((p.x_max - 28.0).abs() < 1e-6);
        assert!((p.f_m - 51.0).abs() < 1e-5);
        assert!((p.f2_m - 8.6).abs() < 1e-9);
        assert!((p.l_minus - 4.75).abs() < 1e-4, "{}", p.l_minus);
        assert!((p.l_plus - 2.0).abs() < 1e-4);
        assert_eq!(p.l0, None);
        assert_eq!(p.schwarzian_ok, None);

        let m = MapSpec::<f64>::exglob();
        let (lm, lp) = m
            .estimate_lipschitz_on(32.0, (31.0, 32.0), (32.0, 33.0))
            .unwrap();
        assert!((lm - 3.0).abs() < 1e-9 && (lp - 2.0).abs() < 1e-9);
    }

    #[test]
    fn switching_constants() {
        let m = MapSpec::<f64>::switching();
        let p = m.probe().unwrap();
        assert!((p.k - 1.0).abs() < 1e-12);
        assert!((p.f_m - (1.0 + 2.0 / std::f64::consts::PI)).abs() < 1e-8);
        assert!((p.l_minus - 2.0).abs() < 1e-3, "{}", p.l_minus);
        assert!((p.l_plus - 1.5).abs() < 1e-3, "{}", p.l_plus);
        assert!(!m.is_smooth_at(1.0));
        assert!(matches!(m.derivative_at(1.0, 1), Err(Error::NotSmooth(_))));
        let (a1, a2) = m.side_slopes(1.0, 0.1);
        assert!((a1 - 1.0).abs() < 1e-3 && (a2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn derivatives_and_schwarzian() {
        let r = ricker(3.5);
        assert!((r.derivative_at(1.0, 1).unwrap() + 2.5).abs() < 1e-14);
        assert!(r.derivative_at(1.0 / 3.5, 1).unwrap().abs() < 1e-12);
        assert!(r.schwarzian_at(0.7).unwrap() < 0.0);
        assert!(r.schwarzian_at(2.0).unwrap() < 0.0);
        assert!(matches!(
            r.schwarzian_at(1.0 / 3.5),
            Err(Error::Singular(_))
        ));
        let q = MapSpec::<f64>::quail();
        let k = q.probe().unwrap().k;
        assert!((q.derivative_at(k, 1).unwrap() + 2.521).abs() < 1e-3);
        assert!(r.derivative_at(1.0, 4).is_err());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for m in [ricker(3.5), ricker(3.0), MapSpec::quail()] {
            for x in search::open_grid(0.05, 3.0, 101) {
                for (order, tol) in [(1u8, 1e-6), (2, 1e-6), (3, 1e-3)] {
                    let a = m.derivative_at(x, order).unwrap();
                    let fd = m.finite_difference(x, order);
                    let scale = a.abs().max(1.0);
                    assert!(
                        (a - fd).abs() <= tol * scale,
                        "{} order {order} at {x}: {a} vs {fd}",
                        m.name
                    );
                }
            }
        }
    }

    #[test]
    fn nested_lipschitz_intervals_converge_to_derivative() {
        let m = ricker(3.5);
        let mut last = f64::INFINITY;
        for w in [0.1, 0.01, 0.001] {
            let (lm, lp) = m
                .estimate_lipschitz_on(1.0, (1.0 - w, 1.0), (1.0, 1.0 + w))
                .unwrap();
            assert!(lm >= 2.5 - 1e-9);
            let gap = (lm - 2.5).abs().max((lp - 2.5).abs());
            assert!(gap < last);
            // |f''(1)| / 2 · w with f''(1) = r(r − 2)
            assert!(gap <= 3.5 * 1.5 / 2.0 * w * 1.05, "{w}: {gap}");
            last = gap;
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let m = MapSpec::<f32>::ricker(3.5).unwrap();
        let p = m.probe().unwrap();
        assert!((p.k - 1.0).abs() < 1e-5);
        assert!((p.l0.unwrap() - 2.5).abs() < 1e-4);
        let e = MapSpec::<f32>::exglob();
        assert_eq!(e.eval(32.0).unwrap(), 32.0);
    }

    #[test]
    fn rejects_stable_maps() {
        // f(x) = x/2 + 1 near K = 2 is stable: no trap structure around K
        let stable = MapSpec::piecewise(
            "stable",
            PiecewiseLinear::new(
                vec![Segment {
                    lo: 0.0,
                    hi: 10.0,
                    slope: 0.5,
                    intercept: 1.0,
                }],
                6.0,
            )
            .unwrap(),
        );
        assert!(matches!(stable.probe_with(2.0), Err(Error::Structure(_))));
    }
}
