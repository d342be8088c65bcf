//! Decreasing involutions `φ` that envelope the controlled map, and the
//! multi-interval gain they certify.

use serde::Serialize;

use super::constants::{psi, script_l};
use crate::error::{Error, Result};
use crate::maps::search::{open_grid, refined_max, GRID};
use crate::maps::{MapProbe, MapSpec, Partition};
use crate::scalar::{approx, lit, Real, Scalar};

/// Piecewise-linear involution with breakpoints `K = a₀ > a₁ > … > a_m` on the
/// left and images `K = b₀ < b₁ < … < b_m` on the right.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeSpec<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub c_minus: Vec<T>,
    pub c_plus: Vec<T>,
}

/// `b_{i+1} = C⁻_i (a_i − a_{i+1}) + b_i`, `C⁺_i = 1/C⁻_i`.
pub fn build_envelope<T: Scalar>(a: &[T], c_minus: &[T]) -> Result<EnvelopeSpec<T>> {
    if a.len() < 2 || c_minus.len() + 1 != a.len() {
        return Err(Error::Input(format!(
            "need m + 1 ≥ 2 breakpoints and m slopes, got {} and {}",
            a.len(),
            c_minus.len()
        )));
    }
    if a.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input(
            "breakpoints must strictly decrease from K".into(),
        ));
    }
    if a.last().is_some_and(|x| *x <= T::zero()) {
        return Err(Error::Input("breakpoints must be positive".into()));
    }
    if c_minus.iter().any(|c| *c <= T::zero()) {
        return Err(Error::Input("envelope slopes must be positive".into()));
    }
    let mut b = vec![a[0].clone()];
    for i in 0..c_minus.len() {
        let next = c_minus[i].clone() * (a[i].clone() - a[i + 1].clone()) + b[i].clone();
        b.push(next);
    }
    Ok(EnvelopeSpec {
        a: a.to_vec(),
        b,
        c_plus: c_minus.iter().map(|c| T::one() / c.clone()).collect(),
        c_minus: c_minus.to_vec(),
    })
}

impl<T: Scalar> EnvelopeSpec<T> {
    pub fn k(&self) -> &T {
        &self.a[0]
    }

    /// Domain `[a_m, b_m]` on which `φ` is defined.
    pub fn domain(&self) -> (T, T) {
        (
            self.a.last().unwrap().clone(),
            self.b.last().unwrap().clone(),
        )
    }

    pub fn eval(&self, x: &T) -> Option<T> {
        let (lo, hi) = self.domain();
        if *x < lo || *x > hi {
            return None;
        }
        let k = self.k();
        if x <= k {
            let i = (0..self.c_minus.len()).find(|&i| *x >= self.a[i + 1])?;
            Some(self.b[i].clone() - self.c_minus[i].clone() * (x.clone() - self.a[i].clone()))
        } else {
            let i = (0..self.c_plus.len()).find(|&i| *x <= self.b[i + 1])?;
            Some(self.a[i].clone() - self.c_plus[i].clone() * (x.clone() - self.b[i].clone()))
        }
    }
}

impl<T: Real> EnvelopeSpec<T> {
    /// Largest `|φ(φ(x)) − x|` over a grid of the domain.
    pub fn involution_error(&self, n: usize) -> T {
        let (lo, hi) = self.domain();
        crate::maps::search::grid(lo, hi, n)
            .filter_map(|x| {
                let y = self.eval(&x)?;
                let z = self.eval(&y.max(lo).min(hi))?;
                Some((z - x).abs())
            })
            .fold(T::zero(), T::max)
    }
}

/// Outcome of an envelope check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeCheck<T> {
    pub passed: bool,
    /// Smallest normalised slack over all four inequalities.
    pub margin: T,
    /// Where the smallest slack occurs.
    pub witness: T,
    /// `φ(witness)`.
    pub witness_mirror: Option<T>,
    pub grid: usize,
}

/// Grid check that `φ > g` and `g > x` on `(d₁, K)`, `φ < g` and `0 < g < x` on
/// `(K, d₂)`. Slack is divided by `|x − K|` so the comparison stays meaningful
/// next to the equilibrium.
pub fn check_envelope<T: Real>(
    g: impl Fn(T) -> T,
    env: &EnvelopeSpec<T>,
    interval: (T, T),
) -> EnvelopeCheck<T> {
    let k = *env.k();
    let (lo, hi) = env.domain();
    let d1 = interval.0.max(lo);
    let d2 = interval.1.min(hi);
    let mut worst = (T::infinity(), k);
    for (a, b) in [(d1, k), (k, d2)] {
        for x in open_grid(a, b, GRID) {
            let Some(phi) = env.eval(&x) else { continue };
            let gx = g(x);
            let w = (x - k).abs();
            let slack = if x < k {
                ((phi - gx) / w).min((gx - x) / w)
            } else {
                ((gx - phi) / w).min((x - gx) / w).min(gx / w)
            };
            if slack < worst.0 {
                worst = (slack, x);
            }
        }
    }
    EnvelopeCheck {
        passed: worst.0 > lit(1e-12),
        margin: worst.0,
        witness: worst.1,
        witness_mirror: env.eval(&worst.1),
        grid: GRID,
    }
}

/// Multi-interval certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiInterval<T> {
    pub alpha0: T,
    /// `Ψ(L_i⁻, L_i⁺)` for `i ≥ 1`, after dropping breakpoints.
    pub psi: Vec<T>,
    pub certified: bool,
    /// Partition actually used.
    pub a: Vec<T>,
    pub l_minus: Vec<T>,
    pub l_plus: Vec<T>,
    /// Breakpoints removed because `𝓛⁻_{i−1}(α₀) < 0`.
    pub dropped: Vec<T>,
    pub envelope: EnvelopeSpec<T>,
}

/// `α₀ = Ψ(L₀⁻, L₀⁺)` and whether `α₀ ≥ max_{i≥1} Ψ(L_i⁻, L_i⁺) − tol`.
pub fn multi_interval_gain<T: Scalar>(
    partition: &Partition<T>,
    tol: T,
) -> Result<MultiInterval<T>> {
    partition.validate()?;
    let (l0m, l0p) = (partition.l_minus[0].clone(), partition.l_plus[0].clone());
    if l0m.clone() * l0p.clone() <= T::one() {
        return Err(Error::LocallyStable("L₀⁻L₀⁺ ≤ 1".into()));
    }
    let a0 = psi(l0m, l0p)?;
    let mut a = vec![partition.a[0].clone()];
    let mut lm = vec![partition.l_minus[0].clone()];
    let mut lp = vec![partition.l_plus[0].clone()];
    let mut dropped = Vec::new();
    for i in 1..partition.l_minus.len() {
        let last = lm.len() - 1;
        if script_l(lm[last].clone(), a0.clone()) < T::zero() {
            // merge segment i into the previous one
            dropped.push(partition.a[i].clone());
            if partition.l_minus[i] > lm[last] {
                lm[last] = partition.l_minus[i].clone();
            }
            if partition.l_plus[i] > lp[last] {
                lp[last] = partition.l_plus[i].clone();
            }
        } else {
            a.push(partition.a[i].clone());
            lm.push(partition.l_minus[i].clone());
            lp.push(partition.l_plus[i].clone());
        }
    }
    a.push(partition.a.last().unwrap().clone());
    let psis = lm
        .iter()
        .zip(&lp)
        .skip(1)
        .map(|(m, p)| psi(m.clone(), p.clone()))
        .collect::<Result<Vec<T>>>()?;
    let certified = psis.iter().all(|p| a0.clone() >= p.clone() - tol.clone());
    let slopes: Vec<T> = lm.iter().map(|l| script_l(l.clone(), a0.clone())).collect();
    if slopes.iter().any(|c| *c <= T::zero()) {
        return Err(Error::Certificate(
            "envelope slope 𝓛⁻_i(α₀) is not positive".into(),
        ));
    }
    let envelope = build_envelope(&a, &slopes)?;
    Ok(MultiInterval {
        alpha0: a0,
        psi: psis,
        certified,
        a,
        l_minus: lm,
        l_plus: lp,
        dropped,
        envelope,
    })
}

/// Certificate plus the grid cross-check against the controlled map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub gain: MultiInterval<f64>,
    /// Envelope check at `α₀ + 0.01`, present only when certified.
    pub cross_check: Option<EnvelopeCheck<f64>>,
}

pub fn multi_interval_certificate(
    map: &MapSpec<f64>,
    partition: &Partition<f64>,
) -> Result<Certificate> {
    let gain = multi_interval_gain(partition, 1e-12)?;
    let b_end = *gain.envelope.b.last().unwrap();
    if b_end.is_nan() || b_end <= gain.envelope.a[0] {
        return Err(Error::Certificate(format!("b-recursion ended at {b_end}")));
    }
    let cross_check = gain.certified.then(|| {
        let alpha = gain.alpha0 + 0.01;
        check_envelope(
            |x| map.controlled(alpha, x),
            &gain.envelope,
            gain.envelope.domain(),
        )
    });
    Ok(Certificate { gain, cross_check })
}

/// Trace of the inductive refinement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Refinement<T> {
    pub alpha_bar: T,
    pub alphas: Vec<T>,
    pub b: Vec<T>,
}

/// `ᾱ = max α_i` with `b_i = max_{[a_i, K]} G(α_{i−1}, ·)` and
/// `α_i = max{α_{i−1}, Ψ(L_i⁻, L⁺(b_i))}`.
pub fn refine_alpha<T: Real>(
    map: &MapSpec<T>,
    probe: &MapProbe<T>,
    partition: &Partition<T>,
    l_plus_tail: impl Fn(T) -> T,
) -> Result<Refinement<T>> {
    partition.validate()?;
    let k = partition.a[0];
    let mut alpha = psi(partition.l_minus[0], partition.l_plus[0])?;
    let mut alphas = vec![alpha];
    let mut bs = vec![k];
    for i in 1..partition.l_minus.len() {
        let prev = alpha;
        let (_, b) = refined_max(|x| map.controlled(prev, x), partition.a[i], k, GRID, false);
        if b > probe.f_m {
            return Err(Error::Certificate(format!(
                "b_{i} = {} exceeds f_m = {}",
                approx(&b),
                approx(&probe.f_m)
            )));
        }
        alpha = alpha.max(psi(partition.l_minus[i], l_plus_tail(b))?);
        alphas.push(alpha);
        bs.push(b);
    }
    Ok(Refinement {
        alpha_bar: alphas.iter().copied().fold(T::neg_infinity(), T::max),
        alphas,
        b: bs,
    })
}

/// `L⁺(z)`: largest local decrease rate of `f` on `[z, upper]`, from adjacent
/// grid differences (exact segment slopes for piecewise-linear maps).
pub fn local_descent<T: Real>(map: &MapSpec<T>, z: T, upper: T) -> T {
    if let Some(p) = map.as_piecewise() {
        return p
            .segments
            .iter()
            .filter(|s| s.hi > z && s.lo < upper.max(z))
            .map(|s| -s.slope)
            .fold(T::zero(), T::max);
    }
    let pts: Vec<T> = crate::maps::search::grid(z, upper, GRID).collect();
    pts.windows(2)
        .map(|w| (map.f(w[0]) - map.f(w[1])) / (w[1] - w[0]))
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::Rational;

    #[test]
    fn single_segment_and_reflection() {
        let e = build_envelope(&[10.0, 4.0], &[1.0]).unwrap();
        assert_eq!(e.b, vec![10.0, 16.0]);
        for x in [4.0, 7.0, 10.0, 13.0, 16.0] {
            assert_eq!(e.eval(&x).unwrap(), 20.0 - x);
        }
        let e = build_envelope(&[32.0f64, 28.0], &[4.0 / 3.0]).unwrap();
        assert!((e.eval(&30.0).unwrap() - (32.0 + 4.0 / 3.0 * 2.0)).abs() < 1e-12);
        assert!(build_envelope(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn exact_involution() {
        let a: Vec<Rational> = vec![ratio(32, 1), ratio(31, 1), ratio(29, 1), ratio(28, 1)];
        let c = vec![ratio(4, 3), ratio(5, 2), ratio(37, 12)];
        let e = build_envelope(&a, &c).unwrap();
        for i in 0..=28 {
            let x = ratio::<Rational>(28, 1) + ratio::<Rational>(i, 7);
            if x > a[0] {
                break;
            }
            let y = e.eval(&x).unwrap();
            assert_eq!(e.eval(&y).unwrap(), x);
        }
    }

    #[test]
    fn exglob_pwl_certified() {
        let m = MapSpec::<f64>::exglob();
        let part = m.as_piecewise().unwrap().partition.clone().unwrap();
        let cert = multi_interval_certificate(&m, &part).unwrap();
        assert!((cert.gain.alpha0 - 5.0 / 12.0).abs() < 1e-15);
        assert!(cert.gain.certified && cert.cross_check.unwrap().passed);
        assert!(cert.gain.envelope.involution_error(1000) < 1e-10);
        for alpha in [0.42, 0.45, 0.5] {
            let c = check_envelope(
                |x| m.controlled(alpha, x),
                &cert.gain.envelope,
                cert.gain.envelope.domain(),
            );
            assert!(c.passed, "{alpha}: {c:?}");
        }
        let exact = crate::maps::exglob_pwl::<Rational>().partition.unwrap();
        let g = multi_interval_gain(&exact, ratio(0, 1)).unwrap();
        assert!(g.certified && g.alpha0 == ratio(5, 12) && g.psi[0] == ratio(5, 12));
    }

    #[test]
    fn exnotglob_pwl_fails() {
        let m = MapSpec::<f64>::exnotglob();
        let p = m.probe().unwrap();
        let part = m.as_piecewise().unwrap().partition.clone().unwrap();
        let cert = multi_interval_certificate(&m, &part).unwrap();
        assert!(!cert.gain.certified);
        assert!((cert.gain.psi[0] - 0.46296).abs() < 1e-5);
        let c = check_envelope(
            |x| m.controlled(5.0 / 12.0, x),
            &cert.gain.envelope,
            cert.gain.envelope.domain(),
        );
        assert!(!c.passed);
        assert!((c.witness_mirror.unwrap() - 28.0).abs() < 0.05, "{c:?}");
        let r = refine_alpha(&m, &p, &part, |z| local_descent(&m, z, p.f_m)).unwrap();
        assert!((r.alpha_bar - 7.5 / 16.2).abs() < 1e-9, "{r:?}");
        assert!((r.b[1] - 100.0 / 3.0).abs() < 1e-6);
        let margin = crate::stability::two_cycle_margin(&m, &p, r.alpha_bar + 1e-3);
        assert!(margin.value > 0.0);
    }

    #[test]
    fn envelope_itself_is_rejected() {
        let e = build_envelope(&[1.0, 0.5], &[2.0]).unwrap();
        let c = check_envelope(|x| e.eval(&x).unwrap_or(x), &e, e.domain());
        assert!(!c.passed);
    }

    #[test]
    fn degenerate_partition_reduces_to_beta0() {
        let p = Partition {
            a: vec![32.0, 28.0],
            l_minus: vec![3.0],
            l_plus: vec![2.0],
        };
        let g = multi_interval_gain(&p, 0.0).unwrap();
        assert!(g.certified && g.psi.is_empty());
        assert_eq!(g.alpha0, crate::stability::beta0(3.0, 2.0).unwrap());
    }
}
