//! Bifurcation data over `α` and `(α, ℓ)` verdict rasters.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{run_trajectory, Outcome, PathStats, Record, SimConfig};
use crate::error::{Error, Result};
use crate::maps::{MapProbe, MapSpec};
use crate::noise::NoiseSpec;
use crate::stability::{cell_verdict, ControlSpec, EnvelCurve, RegionConstants, Verdict};

/// Rate at which a cell or slice counts as stabilised.
pub const STABLE_RATE: f64 = 0.99;

/// `n ≥ 2` equally spaced points from `lo` to `hi`, rounded to 12 decimals
/// so that `0.3` comes out as `0.3`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Input(format!(
            "grid needs lo < hi and n ≥ 2, got [{lo}, {hi}] × {n}"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let tidy = |x: f64| {
        if x.abs() < 1e6 {
            (x * 1e12).round() / 1e12
        } else {
            x
        }
    };
    let g: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                tidy(lo + step * i as f64)
            }
        })
        .collect();
    if g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input(format!(
            "grid [{lo}, {hi}] × {n} is finer than 1e-12"
        )));
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BifurcationConfig {
    pub ell: f64,
    pub alphas: Vec<f64>,
    pub transient: usize,
    pub samples: usize,
    pub paths_per_alpha: u64,
    pub x0: f64,
    pub master_seed: u64,
}

impl BifurcationConfig {
    pub fn new(ell: f64, alphas: Vec<f64>, master_seed: u64) -> Self {
        Self {
            ell,
            alphas,
            transient: 1000,
            samples: 200,
            paths_per_alpha: 1,
            x0: 0.5,
            master_seed,
        }
    }
}

/// Post-transient states of every path at one `α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSlice {
    pub alpha: f64,
    /// `α − ℓ < 0` or `α + ℓ ≥ 1`.
    pub skipped: bool,
    pub stats: PathStats,
    pub states: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bifurcation {
    pub map: String,
    pub noise: NoiseSpec,
    pub config: BifurcationConfig,
    pub slices: Vec<AlphaSlice>,
}

impl Bifurcation {
    /// Smallest `α` from which every larger non-skipped slice has rate `≥ 0.99`.
    pub fn collapse_threshold(&self) -> Option<f64> {
        let mut threshold = None;
        for s in self.slices.iter().rev().filter(|s| !s.skipped) {
            if s.stats.rate() >= STABLE_RATE {
                threshold = Some(s.alpha);
            } else {
                break;
            }
        }
        threshold
    }
}

/// Path `p` at the `i`-th `α` uses stream `i·paths + p`.
pub fn bifurcation_sweep(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    noise: &NoiseSpec,
    cfg: &BifurcationConfig,
) -> Result<Bifurcation> {
    noise.validate()?;
    if cfg.samples == 0 || cfg.paths_per_alpha == 0 {
        return Err(Error::Input("need at least one sample and one path".into()));
    }
    let sim = SimConfig {
        horizon: cfg.transient + cfg.samples,
        window: cfg.samples,
        record: Record::Decimated {
            head: 0,
            tail: cfg.samples,
            every: 0,
        },
    };
    let paths = cfg.paths_per_alpha;
    let slices = cfg
        .alphas
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let Ok(control) = ControlSpec::new(alpha, cfg.ell) else {
                return Ok(AlphaSlice {
                    alpha,
                    skipped: true,
                    stats: PathStats::default(),
                    states: Vec::new(),
                });
            };
            let runs = (0..paths)
                .into_par_iter()
                .map(|p| {
                    run_trajectory(
                        map,
                        probe,
                        control,
                        noise,
                        cfg.x0,
                        &sim,
                        cfg.master_seed,
                        i as u64 * paths + p,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let mut stats = PathStats::default();
            let mut states = Vec::with_capacity(runs.len() * cfg.samples);
            for r in &runs {
                stats.record(r);
                states.extend(r.samples.iter().map(|s| s.x));
            }
            Ok(AlphaSlice {
                alpha,
                skipped: false,
                stats,
                states,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Bifurcation {
        map: map.label(),
        noise: noise.clone(),
        config: cfg.clone(),
        slices,
    })
}

/// `alpha,sample` rows.
pub fn write_bifurcation_csv<W: Write>(out: W, b: &Bifurcation) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "sample"]).map_err(csv_err)?;
    for s in &b.slices {
        for x in &s.states {
            w.write_record([s.alpha.to_string(), x.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Input(format!("csv: {e}")))
}

/// Per-`α` outcome counts.
pub fn write_rates_csv<W: Write>(out: W, b: &Bifurcation) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "alpha",
        "skipped",
        "paths",
        "converged",
        "two_cycle",
        "unresolved",
        "escaped",
        "rate",
    ])
    .map_err(csv_err)?;
    for s in &b.slices {
        let st = &s.stats;
        w.write_record([
            s.alpha.to_string(),
            s.skipped.to_string(),
            st.paths.to_string(),
            st.converged.to_string(),
            st.two_cycle.to_string(),
            st.unresolved.to_string(),
            st.escaped.to_string(),
            st.rate().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(format!("csv: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RasterConfig {
    pub alpha_grid: Vec<f64>,
    pub ell_grid: Vec<f64>,
    /// Zero skips simulation.
    pub paths: u64,
    pub horizon: usize,
    pub x0: f64,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub alpha: f64,
    pub ell: f64,
    pub analytic: Verdict,
    /// Absent for inadmissible cells or when nothing was simulated.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRegion {
    pub map: String,
    pub noise: NoiseSpec,
    pub constants: RegionConstants,
    pub config: RasterConfig,
    /// Row-major, `ell` outer and `alpha` inner.
    pub cells: Vec<Cell>,
}

impl StabilityRegion {
    pub fn cell(&self, i_alpha: usize, j_ell: usize) -> &Cell {
        &self.cells[j_ell * self.config.alpha_grid.len() + i_alpha]
    }

    /// Cells where the analytic verdict holds but fewer than 99% of paths converged.
    pub fn disagreements(&self) -> Vec<&Cell> {
        self.cells
            .iter()
            .filter(|c| c.analytic.holds() && c.rate.is_some_and(|r| r < STABLE_RATE))
            .collect()
    }

    /// Cells that converged empirically without an analytic guarantee.
    pub fn empirical_only(&self) -> Vec<&Cell> {
        self.cells
            .iter()
            .filter(|c| !c.analytic.holds() && c.rate.is_some_and(|r| r >= STABLE_RATE))
            .collect()
    }

    /// Smallest `α` per `ℓ` with a holding verdict.
    pub fn analytic_boundary(&self) -> Vec<(f64, Option<f64>)> {
        let n = self.config.alpha_grid.len();
        self.config
            .ell_grid
            .iter()
            .enumerate()
            .map(|(j, &ell)| {
                let first = self.cells[j * n..(j + 1) * n]
                    .iter()
                    .find(|c| c.analytic.holds());
                (ell, first.map(|c| c.alpha))
            })
            .collect()
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// Cell `c` (row-major index) uses streams `c·paths + p`.
pub fn region_raster(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    noise: &NoiseSpec,
    constants: RegionConstants,
    cfg: &RasterConfig,
) -> Result<StabilityRegion> {
    noise.validate()?;
    if !strictly_increasing(&cfg.alpha_grid) || !strictly_increasing(&cfg.ell_grid) {
        return Err(Error::Input(
            "raster grids must be finite and strictly increasing".into(),
        ));
    }
    let na = cfg.alpha_grid.len();
    let sim = SimConfig::quiet(cfg.horizon);
    let cells = (0..na * cfg.ell_grid.len())
        .into_par_iter()
        .map(|c| {
            let (alpha, ell) = (cfg.alpha_grid[c % na], cfg.ell_grid[c / na]);
            let analytic = cell_verdict(&constants, noise, alpha, ell);
            let rate = match ControlSpec::new(alpha, ell) {
                Ok(control) if cfg.paths > 0 => {
                    let mut stats = PathStats::default();
                    for p in 0..cfg.paths {
                        let stream = c as u64 * cfg.paths + p;
                        let r = run_trajectory(
                            map,
                            probe,
                            control,
                            noise,
                            cfg.x0,
                            &sim,
                            cfg.master_seed,
                            stream,
                        )?;
                        stats.record(&r);
                    }
                    Some(stats.rate())
                }
                _ => None,
            };
            Ok(Cell {
                alpha,
                ell,
                analytic,
                rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityRegion {
        map: map.label(),
        noise: noise.clone(),
        constants,
        config: cfg.clone(),
        cells,
    })
}

/// `alpha,ell,analytic,rate` rows; `rate` is empty when not simulated.
pub fn write_region_csv<W: Write>(out: W, region: &StabilityRegion) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "ell", "analytic", "rate"])
        .map_err(csv_err)?;
    for c in &region.cells {
        let rate = c.rate.map(|r| r.to_string()).unwrap_or_default();
        w.write_record([
            c.alpha.to_string(),
            c.ell.to_string(),
            c.analytic.symbol().to_string(),
            rate,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(format!("csv: {e}")))
}

/// `x,envel` rows.
pub fn write_envelope_csv<W: Write>(out: W, curve: &EnvelCurve<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "envel"]).map_err(csv_err)?;
    for (x, e) in &curve.points {
        w.write_record([x.to_string(), e.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(format!("csv: {e}")))
}

/// Smallest `α` on `grid` whose deterministic orbits from every `x0` in
/// `starts` converge, with all larger grid values converging too.
pub fn deterministic_threshold(
    map: &MapSpec<f64>,
    probe: &MapProbe<f64>,
    alphas: &[f64],
    starts: &[f64],
    horizon: usize,
) -> Result<Option<f64>> {
    let sim = SimConfig::quiet(horizon);
    let ok = alphas
        .par_iter()
        .map(|&alpha| {
            let control = ControlSpec::deterministic(alpha)?;
            for &x0 in starts {
                let r = run_trajectory(map, probe, control, &NoiseSpec::Bernoulli, x0, &sim, 0, 0)?;
                if r.verdict != Outcome::Converged {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    let mut threshold = None;
    for (a, good) in alphas.iter().zip(ok).rev() {
        if !good {
            break;
        }
        threshold = Some(*a);
    }
    Ok(threshold)
}
