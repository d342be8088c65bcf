//! Everything the theory says about one map, gathered for serialisation.

use serde::Serialize;

use super::constants::{alpha0, beta0, psi, sides_bound, ControlSpec, Verdict};
use super::envelope::{
    local_descent, multi_interval_certificate, refine_alpha, Certificate, Refinement,
};
use super::exact::exact_beta_star;
use super::regions::{
    bernoulli_example_gain, cell_verdict, construct_symmetric_gain, ExampleGain, RegionConstants,
    SymmetricGain,
};
use super::slope_envelope::check_slope_envelope;
use super::two_cycle::{beta_star, two_cycle_witness, BetaStar, TwoCycle};
use crate::error::Result;
use crate::maps::{MapProbe, MapSpec};
use crate::noise::NoiseSpec;
use crate::scalar::approx;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constants {
    /// `Ψ(L⁻, L⁺)`.
    pub beta0: Option<f64>,
    /// `(L₀ − 1)/(L₀ + 1)` for smooth maps.
    pub alpha0: Option<f64>,
    pub beta_star: BetaStar<f64>,
    /// Exact rational threshold for piecewise-linear maps.
    pub beta_star_exact: Option<f64>,
    /// `(a₁, a₂)` estimated on `(K − θ, K + θ)`.
    pub side_slopes: (f64, f64),
    pub theta: f64,
    pub sides_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeEnvelopeSummary {
    pub holds: bool,
    pub max: f64,
    pub argmax: f64,
    pub alpha0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseSection {
    pub noise: NoiseSpec,
    pub mu2: f64,
    pub symmetric_gain: Option<SymmetricGain>,
    pub example_gain: Option<ExampleGain>,
    /// Verdict for the requested control, if one was given.
    pub control: Option<(ControlSpec, Verdict)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub map: String,
    pub probe: MapProbe<f64>,
    pub constants: Constants,
    pub certificate: Option<Certificate>,
    pub refinement: Option<Refinement<f64>>,
    pub slope_envelope: Option<SlopeEnvelopeSummary>,
    /// A two-cycle just below `β_*`.
    pub two_cycle: Option<TwoCycle<f64>>,
    pub noise: Option<NoiseSection>,
    /// Non-fatal problems met along the way.
    pub notes: Vec<String>,
}

/// Half-width of the neighbourhood of `K` used for the side slopes.
pub fn side_theta(probe: &MapProbe<f64>) -> f64 {
    0.5 * (probe.k - probe.x_max).min(probe.f_m - probe.k)
}

/// Constants for [`cell_verdict`], with `β_*` supplied.
pub fn region_constants(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    beta_star: f64,
) -> RegionConstants {
    let l0 = probe.l0;
    let sides = match l0 {
        Some(l) => l / (l + 1.0),
        None => {
            let (a1, a2) = map.side_slopes(probe.k, side_theta(probe));
            sides_bound(a1, a2)
        }
    };
    RegionConstants {
        l0,
        l_minus: probe.l_minus,
        l_plus: probe.l_plus,
        beta_star,
        sides,
    }
}

pub fn analyze(
    map: &MapSpec<f64>,
    noise: Option<&NoiseSpec>,
    control: Option<ControlSpec>,
) -> Result<StabilityReport> {
    let probe = map.probe()?;
    let mut notes = Vec::new();
    let bs = beta_star(map, &probe)?;
    let exact = map.as_piecewise().and_then(|_| {
        let e = match map.name.as_str() {
            "exglob" => Some(crate::maps::exglob_pwl()),
            "exnotglob" => Some(crate::maps::exnotglob_pwl()),
            _ => map.as_piecewise().and_then(|p| p.to_exact().ok()),
        }?;
        exact_beta_star(&e, 30).map(|b| approx(&b))
    });
    let theta = side_theta(&probe);
    let side_slopes = map.side_slopes(probe.k, theta);
    let constants = Constants {
        beta0: beta0(probe.l_minus, probe.l_plus).ok(),
        alpha0: probe.l0.and_then(|l| alpha0(l).ok()),
        beta_star: bs,
        beta_star_exact: exact,
        side_slopes,
        theta,
        sides_bound: sides_bound(side_slopes.0, side_slopes.1),
    };

    let partition = map.as_piecewise().and_then(|p| p.partition.clone());
    let mut certificate = None;
    let mut refinement = None;
    if let Some(part) = &partition {
        match multi_interval_certificate(map, part) {
            Ok(c) => {
                if !c.gain.certified {
                    match refine_alpha(map, &probe, part, |z| local_descent(map, z, probe.f_m)) {
                        Ok(r) => refinement = Some(r),
                        Err(e) => notes.push(format!("refinement: {e}")),
                    }
                }
                certificate = Some(c);
            }
            Err(e) => notes.push(format!("certificate: {e}")),
        }
    }

    let slope_envelope = match check_slope_envelope(map, &probe) {
        Ok(c) => Some(SlopeEnvelopeSummary {
            holds: c.holds(),
            max: c.max,
            argmax: c.argmax,
            alpha0: c.alpha0,
        }),
        Err(e) => {
            notes.push(format!("derivative test: {e}"));
            None
        }
    };

    let below = bs.value - 1e-3;
    let two_cycle = (below > 0.0)
        .then(|| two_cycle_witness(map, &probe, below))
        .flatten();

    let noise = noise.map(|n| {
        let symmetric_gain = probe.l0.and_then(|l| construct_symmetric_gain(l, n).ok());
        let example_gain = probe.l0.and_then(|l| bernoulli_example_gain(l).ok());
        let consts = region_constants(map, &probe, bs.value);
        NoiseSection {
            noise: n.clone(),
            mu2: n.mu2(),
            symmetric_gain,
            example_gain,
            control: control.map(|c| (c, cell_verdict(&consts, n, c.alpha, c.ell))),
        }
    });
    if probe.l0.is_none() {
        if let Ok(p) = psi(probe.l_minus, probe.l_plus) {
            notes.push(format!(
                "no derivative at K; local gain uses Ψ(L⁻, L⁺) = {p:.6}"
            ));
        }
    }

    Ok(StabilityReport {
        map: map.label(),
        probe,
        constants,
        certificate,
        refinement,
        slope_envelope,
        two_cycle,
        noise,
        notes,
    })
}
