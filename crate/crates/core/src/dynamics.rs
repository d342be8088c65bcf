//! Seeded simulation of `x_{n+1} = G(α + ℓξ_{n+1}, x_n)` and classification of
//! the tail of each path.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::search::refined_min;
use crate::maps::search::GRID;
use crate::maps::{MapProbe, MapSpec};
use crate::noise::{monte_carlo, stream, McEstimate, NoiseSpec};
use crate::stability::{script_l, ControlSpec};

/// Tail window used for classification.
pub const WINDOW: usize = 200;
/// States above this count as escaped.
pub const ESCAPE: f64 = 1e12;

/// One step of the controlled map.
#[inline]
pub fn step(map: &MapSpec<f64>, beta: f64, x: f64) -> f64 {
    map.controlled(beta, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    TwoCycle,
    Unresolved,
    Escaped,
}

/// Which states to keep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Record {
    None,
    /// First `head`, last `tail` and every `every`-th state in between.
    Decimated {
        head: usize,
        tail: usize,
        every: usize,
    },
    Full,
}

impl Default for Record {
    fn default() -> Self {
        Record::Decimated {
            head: 1000,
            tail: 1000,
            every: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub n: usize,
    pub x: f64,
    /// Gain applied to `x_n`; absent for the final state.
    pub beta: Option<f64>,
}

/// Path-wise checks of the trap invariance and the monotone approach from below.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    pub trap: u64,
    pub monotone: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryResult {
    pub samples: Vec<Sample>,
    pub verdict: Outcome,
    /// First `n` with `x_n ∈ [f²_m, f_m]`.
    pub steps_to_trap: Option<usize>,
    pub residual: f64,
    pub final_state: f64,
    pub seed: u64,
    pub stream_index: u64,
    pub violations: Violations,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub window: usize,
    pub record: Record,
}

impl SimConfig {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            window: WINDOW,
            record: Record::default(),
        }
    }

    pub fn quiet(horizon: usize) -> Self {
        Self {
            record: Record::None,
            ..Self::new(horizon)
        }
    }
}

/// Convergence tolerance `1e-6·max(1, K)`.
pub fn tolerance(k: f64) -> f64 {
    1e-6 * k.max(1.0)
}

/// Classifies a tail window.
pub fn classify(tail: &[f64], k: f64, tol: f64) -> Outcome {
    if tail.iter().any(|x| !x.is_finite() || *x > ESCAPE) {
        return Outcome::Escaped;
    }
    if tail.iter().all(|x| (x - k).abs() <= tol) {
        return Outcome::Converged;
    }
    if tail.len() >= 4 {
        let stats = |parity: usize| {
            let v: Vec<f64> = tail.iter().skip(parity).step_by(2).copied().collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
            (m, var.sqrt())
        };
        let ((m0, s0), (m1, s1)) = (stats(0), stats(1));
        let (lo, hi) = if m0 < m1 { (m0, m1) } else { (m1, m0) };
        let gap = hi - lo;
        let straddle = lo < k - tol && hi > k + tol;
        if straddle && s0.max(s1) <= tol.max(0.05 * gap) {
            return Outcome::TwoCycle;
        }
    }
    Outcome::Unresolved
}

fn keep(record: Record, n: usize, horizon: usize) -> bool {
    match record {
        Record::None => false,
        Record::Full => true,
        Record::Decimated { head, tail, every } => {
            n < head || n + tail > horizon || (every > 0 && n.is_multiple_of(every))
        }
    }
}

/// Simulates one path on stream `(seed, stream_index)`.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    control: ControlSpec,
    noise: &NoiseSpec,
    x0: f64,
    cfg: &SimConfig,
    seed: u64,
    stream_index: u64,
) -> Result<TrajectoryResult> {
    control.validate()?;
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::Infeasible(format!(
            "initial state {x0} must be positive"
        )));
    }
    let mut rng = stream(seed, stream_index);
    let k = probe.k;
    let tol = tolerance(k);
    let slack = 1e-9 * k.max(1.0);
    let (lo, hi) = (probe.f2_m - slack, probe.f_m + slack);
    let window = cfg.window.max(2).min(cfg.horizon + 1);
    let mut tail: VecDeque<f64> = VecDeque::with_capacity(window + 1);
    let mut samples = Vec::new();
    let mut violations = Violations::default();
    let mut steps_to_trap = None;
    let mut x = x0;
    let mut escaped = false;
    for n in 0..=cfg.horizon {
        if steps_to_trap.is_none() && x >= lo && x <= hi {
            steps_to_trap = Some(n);
        }
        tail.push_back(x);
        if tail.len() > window {
            tail.pop_front();
        }
        if !x.is_finite() || x > ESCAPE {
            escaped = true;
            if keep(cfg.record, n, cfg.horizon) || cfg.record != Record::None {
                samples.push(Sample { n, x, beta: None });
            }
            break;
        }
        if n == cfg.horizon {
            if cfg.record != Record::None {
                samples.push(Sample { n, x, beta: None });
            }
            break;
        }
        let beta = if control.ell == 0.0 {
            control.alpha
        } else {
            control.alpha + control.ell * noise.sample(&mut rng)
        };
        if keep(cfg.record, n, cfg.horizon) {
            samples.push(Sample {
                n,
                x,
                beta: Some(beta),
            });
        }
        let next = step(map, beta, x);
        if steps_to_trap.is_some() && !(next >= lo && next <= hi) {
            violations.trap += 1;
        }
        if x < probe.f2_m && !(next > x) {
            violations.monotone += 1;
        }
        x = next;
    }
    let verdict = if escaped {
        Outcome::Escaped
    } else {
        classify(tail.make_contiguous(), k, tol)
    };
    Ok(TrajectoryResult {
        samples,
        verdict,
        steps_to_trap,
        residual: (x - k).abs(),
        final_state: x,
        seed,
        stream_index,
        violations,
    })
}

/// Writes `n,x_n,beta_n` rows.
pub fn write_trajectory_csv<W: Write>(out: W, result: &TrajectoryResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Input(format!("csv: {e}"));
    w.write_record(["n", "x", "beta"]).map_err(io)?;
    for s in &result.samples {
        let beta = s.beta.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([s.n.to_string(), s.x.to_string(), beta])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Input(format!("csv: {e}")))?;
    Ok(())
}

/// Outcome counts over many paths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PathStats {
    pub paths: u64,
    pub converged: u64,
    pub two_cycle: u64,
    pub unresolved: u64,
    pub escaped: u64,
    pub violations: Violations,
}

impl PathStats {
    pub fn rate(&self) -> f64 {
        if self.paths == 0 {
            0.0
        } else {
            self.converged as f64 / self.paths as f64
        }
    }

    pub fn record(&mut self, r: &TrajectoryResult) {
        self.paths += 1;
        match r.verdict {
            Outcome::Converged => self.converged += 1,
            Outcome::TwoCycle => self.two_cycle += 1,
            Outcome::Unresolved => self.unresolved += 1,
            Outcome::Escaped => self.escaped += 1,
        }
        self.violations.trap += r.violations.trap;
        self.violations.monotone += r.violations.monotone;
    }

    fn merge(mut self, o: Self) -> Self {
        self.paths += o.paths;
        self.converged += o.converged;
        self.two_cycle += o.two_cycle;
        self.unresolved += o.unresolved;
        self.escaped += o.escaped;
        self.violations.trap += o.violations.trap;
        self.violations.monotone += o.violations.monotone;
        self
    }
}

/// Runs `paths` paths on streams `first_stream + p` in parallel.
#[allow(clippy::too_many_arguments)]
pub fn path_stats(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    control: ControlSpec,
    noise: &NoiseSpec,
    x0: f64,
    horizon: usize,
    paths: u64,
    master_seed: u64,
    first_stream: u64,
) -> Result<PathStats> {
    control.validate()?;
    let cfg = SimConfig::quiet(horizon);
    (0..paths)
        .into_par_iter()
        .map(|p| {
            run_trajectory(
                map,
                probe,
                control,
                noise,
                x0,
                &cfg,
                master_seed,
                first_stream + p,
            )
            .map(|r| {
                let mut s = PathStats::default();
                s.record(&r);
                s
            })
        })
        .try_reduce(PathStats::default, |a, b| Ok(a.merge(b)))
}

/// Fraction of paths classified as converged.
#[allow(clippy::too_many_arguments)]
pub fn convergence_probability(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    control: ControlSpec,
    noise: &NoiseSpec,
    x0: f64,
    horizon: usize,
    paths: u64,
    master_seed: u64,
) -> Result<f64> {
    path_stats(
        map,
        probe,
        control,
        noise,
        x0,
        horizon,
        paths,
        master_seed,
        0,
    )
    .map(|s| s.rate())
}

/// Steps after which every path from `x0` with gains in `[beta_lo, beta_hi]`
/// is in the trap `[f²_m, f_m]`.
pub fn trap_bound(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    beta_lo: f64,
    beta_hi: f64,
    x0: f64,
) -> Result<u64> {
    if !(beta_lo > 0.0 && beta_lo <= beta_hi && beta_hi < 1.0) {
        return Err(Error::Input(format!(
            "need 0 < β_lo ≤ β_hi < 1, got [{beta_lo}, {beta_hi}]"
        )));
    }
    if !(x0 > 0.0) {
        return Err(Error::Input(format!("x0 = {x0} must be positive")));
    }
    if probe.in_trap(x0) {
        return Ok(1);
    }
    let from_below = |x: f64| -> Result<u64> {
        if x >= probe.f2_m {
            return Ok(0);
        }
        let (_, d1) = refined_min(|y| map.f(y) - y, x, probe.f2_m, GRID, false);
        if !(d1 > 0.0) {
            return Err(Error::Structure(format!(
                "f(x) − x has infimum {d1} ≤ 0 below f²_m"
            )));
        }
        Ok(((probe.f2_m - x) / (d1 * (1.0 - beta_hi))).floor() as u64 + 1)
    };
    if x0 < probe.f2_m {
        return from_below(x0);
    }
    let (_, d2) = refined_min(|y| y - map.f(y), probe.f_m, x0, GRID, false);
    if !(d2 > 0.0) {
        return Err(Error::Structure(format!(
            "x − f(x) has infimum {d2} ≤ 0 above f_m"
        )));
    }
    let n_plus = ((x0 - probe.f_m) / (d2 * (1.0 - beta_hi))).floor() as u64 + 1;
    // G(β, x) grows with β above K, so the lowest landing point uses β_lo
    let (_, landing) = refined_min(|y| map.controlled(beta_lo, y), probe.f_m, x0, GRID, false);
    Ok(n_plus + from_below(landing.max(f64::MIN_POSITIVE))?)
}

/// Checks [`trap_bound`] by simulating `sequences` random gain sequences.
/// Returns the number of paths outside the trap at some `n ≥ S₀`.
pub fn trap_bound_violations(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    beta_lo: f64,
    beta_hi: f64,
    x0: f64,
    sequences: u64,
    seed: u64,
) -> Result<u64> {
    let s0 = trap_bound(map, probe, beta_lo, beta_hi, x0)? as usize;
    let horizon = s0 + 200;
    let slack = 1e-9 * probe.k.max(1.0);
    let bad = (0..sequences)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream(seed, i);
            let mut x = x0;
            for n in 0..=horizon {
                if n >= s0 && !(x >= probe.f2_m - slack && x <= probe.f_m + slack) {
                    return true;
                }
                let b = rng.random_range(beta_lo..=beta_hi);
                x = step(map, b, x);
            }
            false
        })
        .count();
    Ok(bad as u64)
}

/// Sample mean of `ln[𝓛⁻(α+ℓξ)𝓛⁺(α+ℓξ)]`.
pub fn empirical_expected_log(
    l_minus: f64,
    l_plus: f64,
    control: ControlSpec,
    noise: &NoiseSpec,
    draws: u64,
    seed: u64,
) -> McEstimate {
    let ControlSpec { alpha, ell } = control;
    monte_carlo(
        noise,
        |u| {
            let b = alpha + ell * u;
            script_l(l_minus, b).ln() + script_l(l_plus, b).ln()
        },
        draws,
        seed,
        0,
    )
}
