//! Sufficient conditions on `(α, ℓ)` for almost sure global stability under noise.

use serde::Serialize;

use super::constants::{alpha0, script_l, ControlSpec, Verdict};
use crate::error::{Error, Result};
use crate::noise::{expected_log_l0, expected_log_pair, NoiseSpec};

/// Open interval `(lo, hi)`; empty when `lo ≥ hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Amplitudes `ℓ` for which Bernoulli noise makes `E ln 𝓛₀(α + ℓξ) < 0`, capped by
/// `α + ℓ < L₀/(L₀+1)` and `ℓ < min{α, 1 − α}`.
pub fn bernoulli_region(l0: f64, alpha: f64) -> Interval {
    let s = 1.0 / (l0 + 1.0);
    let gap = l0 * s - alpha;
    let lower2 = gap * gap - s * s;
    Interval {
        lo: lower2.max(0.0).sqrt(),
        hi: gap.min(alpha).min(1.0 - alpha),
    }
}

/// Outcome of the uniform-noise test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UniformCheck {
    /// `ln 𝓛₀(α) < (1/6)[ℓ(L₀+1)/𝓛₀(α)]²`.
    pub sufficient: bool,
    /// `E ln 𝓛₀(α + ℓξ)` by quadrature.
    pub expected_log: f64,
}

impl UniformCheck {
    pub fn exact_holds(&self) -> bool {
        self.expected_log < 0.0
    }
}

pub fn uniform_condition(l0: f64, alpha: f64, ell: f64) -> Result<UniformCheck> {
    let la = script_l(l0, alpha);
    if !(la > 0.0) || alpha + ell >= l0 / (l0 + 1.0) {
        return Err(Error::Infeasible(format!(
            "need 𝓛₀(α) > 0 and α + ℓ < L₀/(L₀+1); got 𝓛₀(α) = {la}, α + ℓ = {}",
            alpha + ell
        )));
    }
    let r = ell * (l0 + 1.0) / la;
    Ok(UniformCheck {
        sufficient: la.ln() < r * r / 6.0,
        expected_log: expected_log_l0(l0, alpha, ell, &NoiseSpec::Uniform)?,
    })
}

/// A gain pair below `α₀` together with the quantities it was built from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricGain {
    pub control: ControlSpec,
    pub ell0_bound: f64,
    pub ell0: f64,
    pub alpha0: f64,
    pub expected_log: f64,
}

/// Constructs `α < α₀ < α + ℓ < L₀/(L₀+1)` with `E ln 𝓛₀(α + ℓξ) < 0`.
pub fn construct_symmetric_gain(l0: f64, noise: &NoiseSpec) -> Result<SymmetricGain> {
    let a0 = alpha0(l0)?;
    if l0 <= 1.0 {
        return Err(Error::LocallyStable(format!("L₀ = {l0} ≤ 1")));
    }
    let mu2 = noise.mu2();
    let bound = (2.0 / mu2)
        .min(1.0 / (l0 + 1.0))
        .min((l0 - 1.0) / ((1.0 + mu2 / 2.0) * (l0 + 1.0)));
    let ell0 = 0.9 * bound;
    let alpha = a0 - 0.25 * ell0 * ell0 * mu2;
    let cap = alpha.min(1.0 / (l0 + 1.0));
    if !(cap > ell0) {
        return Err(Error::Certificate(format!(
            "empty ℓ interval ({ell0}, {cap})"
        )));
    }
    let ell = 0.5 * (ell0 + cap);
    let control = ControlSpec::new(alpha, ell)?;
    let expected_log = expected_log_l0(l0, alpha, ell, noise)?;
    let top = l0 / (l0 + 1.0);
    if !(alpha < a0 && alpha + ell > a0 && alpha + ell < top && expected_log < 0.0) {
        return Err(Error::Certificate(format!(
            "postcondition failed: α = {alpha}, ℓ = {ell}, α₀ = {a0}, E ln = {expected_log}"
        )));
    }
    Ok(SymmetricGain {
        control,
        ell0_bound: bound,
        ell0,
        alpha0: a0,
        expected_log,
    })
}

/// The explicit Bernoulli pair `α = (L₀ − 1 − (L₀−2)/2)/(L₀+1)`,
/// `ℓ = ((L₀−2)/2 + 1/2)/(L₀+1)`, with a report on whether it lands
/// inside [`bernoulli_region`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleGain {
    pub control: ControlSpec,
    pub below_alpha0: bool,
    pub in_region: bool,
    pub expected_log: f64,
}

pub fn bernoulli_example_gain(l0: f64) -> Result<ExampleGain> {
    if !(l0 > 2.0) {
        return Err(Error::OutOfRange(format!(
            "explicit pair needs L₀ > 2, got {l0}"
        )));
    }
    let h = (l0 - 2.0) / 2.0;
    let alpha = (l0 - 1.0 - h) / (l0 + 1.0);
    let ell = (h + 0.5) / (l0 + 1.0);
    let control = ControlSpec { alpha, ell };
    let expected_log = {
        let c = l0 - alpha * (l0 + 1.0);
        let d = ell * (l0 + 1.0);
        0.5 * (c * c - d * d).ln()
    };
    Ok(ExampleGain {
        control,
        below_alpha0: alpha < alpha0(l0)?,
        in_region: bernoulli_region(l0, alpha).contains(ell),
        expected_log,
    })
}

/// Constants a region verdict depends on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionConstants {
    /// `−f′(K)` for smooth maps; switches the local test to the `L₀` form.
    pub l0: Option<f64>,
    pub l_minus: f64,
    pub l_plus: f64,
    pub beta_star: f64,
    /// Upper bound on `α + ℓ` keeping orbits alternating near `K`.
    pub sides: f64,
}

/// Verdict for one `(α, ℓ)` cell.
///
/// Holds when every gain exceeds `β_*`, or when `α + ℓ > β_*` and the local
/// expected-log condition holds with the gain range inside the side bound.
pub fn cell_verdict(c: &RegionConstants, noise: &NoiseSpec, alpha: f64, ell: f64) -> Verdict {
    if ControlSpec::new(alpha, ell).is_err() {
        return Verdict::Infeasible;
    }
    if alpha - ell > c.beta_star {
        return Verdict::Holds;
    }
    if ell == 0.0 {
        return Verdict::Fails;
    }
    let local = match c.l0 {
        Some(l0) => {
            if alpha + ell >= l0 / (l0 + 1.0) {
                return Verdict::Infeasible;
            }
            expected_log_l0(l0, alpha, ell, noise)
        }
        None => {
            if alpha + ell > c.sides {
                return Verdict::Infeasible;
            }
            expected_log_pair(c.l_minus, c.l_plus, alpha, ell, noise)
        }
    };
    match local {
        Ok(v) => Verdict::from_bool(v < 0.0 && alpha + ell > c.beta_star),
        Err(_) => Verdict::Infeasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_region_examples() {
        let r = bernoulli_region(2.5, 0.368);
        assert!(
            (r.lo - 0.1877).abs() < 0.01 && (r.hi - 0.342).abs() < 0.01,
            "{r:?}"
        );
        assert!(bernoulli_region(2.0, 0.283).contains(0.2));
        let a0 = alpha0(2.5).unwrap();
        assert!(bernoulli_region(2.5, a0).lo.abs() < 1e-7);
        assert!(bernoulli_region(2.5, 0.2).is_empty());
    }

    #[test]
    fn region_matches_expected_log() {
        for l0 in [1.5, 2.0, 2.5, 3.0] {
            for k in 1..40 {
                let alpha = k as f64 * 0.01;
                let r = bernoulli_region(l0, alpha);
                if r.hi - r.lo < 1e-9 {
                    continue;
                }
                let e = expected_log_l0(l0, alpha, r.midpoint(), &NoiseSpec::Bernoulli).unwrap();
                assert!(e < 0.0, "{l0} {alpha}");
            }
        }
    }

    #[test]
    fn uniform_examples() {
        // at α = 0.405 only the exact expectation is negative; the quadratic
        // bound ln 𝓛₀(α) < (ℓ(L₀+1)/𝓛₀(α))²/6 switches on near α = 0.408
        let u = uniform_condition(2.5, 0.405, 0.2).unwrap();
        assert!(u.exact_holds() && !u.sufficient);
        let u = uniform_condition(2.5, 0.41, 0.2).unwrap();
        assert!(u.exact_holds() && u.sufficient);
        assert!(!uniform_condition(2.5, 0.3, 0.0).unwrap().sufficient);
        assert!(uniform_condition(2.5, 0.45, 0.0).unwrap().sufficient);
        assert!(matches!(
            uniform_condition(2.5, 0.6, 0.2),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn symmetric_gain_postconditions() {
        let g = construct_symmetric_gain(2.5, &NoiseSpec::Bernoulli).unwrap();
        assert!((g.ell0_bound - 2.0 / 7.0).abs() < 1e-15);
        for l0 in [1.5, 2.0, 2.5, 3.0, 5.0, 1.0001] {
            for n in [NoiseSpec::Bernoulli, NoiseSpec::Uniform] {
                let g = construct_symmetric_gain(l0, &n).unwrap();
                assert!(g.control.alpha < g.alpha0);
                assert!(g.expected_log < 0.0);
            }
        }
    }

    #[test]
    fn explicit_pair() {
        let g = bernoulli_example_gain(2.5).unwrap();
        assert!((g.control.alpha - 1.25 / 3.5).abs() < 1e-15);
        assert!((g.control.ell - 0.75 / 3.5).abs() < 1e-15);
        assert!(g.below_alpha0);
        // E ln = ½ ln((2L₀ − 1)/4): negative only for L₀ < 5/2
        assert!(bernoulli_example_gain(2.3).unwrap().in_region);
        assert!(g.expected_log.abs() < 1e-12);
        let g3 = bernoulli_example_gain(3.0).unwrap();
        assert!((g3.control.alpha - 0.375).abs() < 1e-15 && (g3.control.ell - 0.25).abs() < 1e-15);
        assert!(g3.below_alpha0 && !g3.in_region && g3.expected_log > 0.0);
        assert!(matches!(
            bernoulli_example_gain(2.0),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn cell_verdicts() {
        let c = RegionConstants {
            l0: Some(2.5),
            l_minus: 2.5,
            l_plus: 2.5,
            beta_star: 3.0 / 7.0,
            sides: 5.0 / 7.0,
        };
        let b = NoiseSpec::Bernoulli;
        assert_eq!(cell_verdict(&c, &b, 0.37, 0.2), Verdict::Holds);
        assert_eq!(cell_verdict(&c, &b, 0.3, 0.2), Verdict::Fails);
        assert_eq!(cell_verdict(&c, &b, 0.1, 0.2), Verdict::Infeasible);
        assert_eq!(cell_verdict(&c, &b, 0.44, 0.0), Verdict::Holds);
        assert_eq!(cell_verdict(&c, &b, 0.42, 0.0), Verdict::Fails);
        assert_eq!(cell_verdict(&c, &b, 0.7, 0.25), Verdict::Holds);
    }
}
