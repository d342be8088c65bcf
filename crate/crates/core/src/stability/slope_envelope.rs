//! Derivative test that local stability at `α₀` is already global:
//! `α₀ > Ψ(−f′(G(α₀, x)), −f′(x))` on `[x_max, K)`.

use serde::Serialize;

use super::constants::psi;
use crate::error::{Error, Result};
use crate::maps::search::grid;
use crate::maps::{MapProbe, MapSpec};
use crate::scalar::{approx, Real};

/// Number of grid cells for the curve.
pub const CURVE_POINTS: usize = 1000;

/// `envel(x)` on `[x_max, K)` with its maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelCurve<T> {
    pub alpha0: T,
    pub points: Vec<(T, T)>,
    pub max: T,
    pub argmax: T,
}

impl<T: Real> EnvelCurve<T> {
    pub fn holds(&self) -> bool {
        self.max < self.alpha0
    }
}

/// `envel(x) = Ψ(−f′(G(α₀,x)), −f′(x))`.
pub fn envel<T: Real>(map: &MapSpec<T>, alpha0: T, x: T) -> Result<T> {
    let d = |y: T| {
        map.derivative_at(y, 1)
            .map_err(|e| Error::NotApplicable(e.to_string()))
    };
    psi(-d(map.controlled(alpha0, x))?, -d(x)?)
}

/// The curve for an explicit `α₀`; requires `f′ < 1` on `[x_max, f_m]`.
pub fn envelope_curve<T: Real>(
    map: &MapSpec<T>,
    probe: &MapProbe<T>,
    alpha0: T,
) -> Result<EnvelCurve<T>> {
    for x in grid(probe.x_max, probe.f_m, CURVE_POINTS) {
        let d = map
            .derivative_at(x, 1)
            .map_err(|e| Error::NotApplicable(e.to_string()))?;
        if !(d < T::one()) {
            return Err(Error::NotApplicable(format!(
                "f′({}) = {} is not below 1",
                approx(&x),
                approx(&d)
            )));
        }
    }
    let points = grid(probe.x_max, probe.k, CURVE_POINTS)
        .take(CURVE_POINTS)
        .map(|x| envel(map, alpha0, x).map(|e| (x, e)))
        .collect::<Result<Vec<_>>>()?;
    let (argmax, max) = points
        .iter()
        .copied()
        .fold((probe.x_max, T::neg_infinity()), |b, p| {
            if p.1 >= b.1 {
                p
            } else {
                b
            }
        });
    Ok(EnvelCurve {
        alpha0,
        points,
        max,
        argmax,
    })
}

/// The curve at `α₀ = (L₀ − 1)/(L₀ + 1)`; `holds()` is the verdict.
pub fn check_slope_envelope<T: Real>(
    map: &MapSpec<T>,
    probe: &MapProbe<T>,
) -> Result<EnvelCurve<T>> {
    let l0 = probe
        .l0
        .ok_or_else(|| Error::NotApplicable(format!("{} is not smooth at K", map.name)))?;
    let a0 = super::constants::alpha0(l0)?;
    envelope_curve(map, probe, a0)
}
