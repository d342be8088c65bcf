//! Executable acceptance checks, shared by the `verify` command and the test suite.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::dynamics::{empirical_expected_log, trap_bound, trap_bound_violations};
use crate::error::Result;
use crate::maps::{exglob_pwl, exnotglob_pwl, MapProbe, MapSpec};
use crate::noise::{expected_log_l0, expected_log_pair, stream, NoiseSpec};
use crate::scalar::{approx, ratio};
use crate::stability::{
    alpha0, analyze, bernoulli_region, beta0, beta_star, check_slope_envelope,
    construct_symmetric_gain, exact_beta_star, mathcal_v, psi, region_constants, script_l,
    side_theta, sides_bound, uniform_condition, ControlSpec,
};
use crate::sweep::{
    bifurcation_sweep, deterministic_threshold, region_raster, uniform_grid, BifurcationConfig,
    RasterConfig,
};
use crate::Rational;

/// Seed shared by every randomized check.
pub const SEED: u64 = 20_240_601;

/// Randomized cases per property suite.
pub const PROPERTY_CASES: usize = 1000;

type Outcome = Result<(bool, String)>;

pub struct CheckSpec {
    pub id: u8,
    pub name: &'static str,
    pub tags: &'static [&'static str],
    run: fn() -> Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub tags: &'static [&'static str],
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckSpec {
    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.to_lowercase();
        self.id.to_string() == f
            || self.name.contains(&f)
            || self.tags.iter().any(|t| t.contains(&f))
    }

    pub fn run(&self) -> Check {
        let start = Instant::now();
        let (passed, detail) = match (self.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        Check {
            id: self.id,
            name: self.name,
            tags: self.tags,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

pub fn checks() -> Vec<CheckSpec> {
    vec![
        CheckSpec {
            id: 1,
            name: "gain-constants",
            tags: &["constants", "ricker", "exglob", "exnotglob", "switching"],
            run: c01,
        },
        CheckSpec {
            id: 2,
            name: "bernoulli-v-product",
            tags: &["constants", "exglob", "noise"],
            run: c02,
        },
        CheckSpec {
            id: 3,
            name: "exnotglob-second-iterate",
            tags: &["constants", "exnotglob"],
            run: c03,
        },
        CheckSpec {
            id: 4,
            name: "bernoulli-region",
            tags: &["noise", "ricker"],
            run: c04,
        },
        CheckSpec {
            id: 5,
            name: "uniform-condition",
            tags: &["noise", "ricker"],
            run: c05,
        },
        CheckSpec {
            id: 6,
            name: "two-cycle-threshold",
            tags: &["global", "ricker", "exnotglob"],
            run: c06,
        },
        CheckSpec {
            id: 7,
            name: "exact-two-cycle-oracle",
            tags: &["global", "exglob", "exnotglob", "exact"],
            run: c07,
        },
        CheckSpec {
            id: 8,
            name: "monte-carlo-expected-log",
            tags: &["noise", "monte-carlo"],
            run: c08,
        },
        CheckSpec {
            id: 9,
            name: "bifurcation-thresholds",
            tags: &["simulation", "ricker"],
            run: c09,
        },
        CheckSpec {
            id: 10,
            name: "deterministic-sharpness",
            tags: &["simulation", "ricker"],
            run: c10,
        },
        CheckSpec {
            id: 11,
            name: "symmetric-gain-construction",
            tags: &["noise", "constants"],
            run: c11,
        },
        CheckSpec {
            id: 12,
            name: "quail-envelope-curve",
            tags: &["global", "quail"],
            run: c12,
        },
        CheckSpec {
            id: 13,
            name: "property-suites",
            tags: &["property"],
            run: c13,
        },
        CheckSpec {
            id: 14,
            name: "switching-divergence",
            tags: &["simulation", "switching"],
            run: c14,
        },
    ]
}

/// Runs every check matching `filter` (all when `None`).
pub fn run(filter: Option<&str>) -> Vec<Check> {
    checks()
        .iter()
        .filter(|c| filter.is_none_or(|f| c.matches(f)))
        .map(CheckSpec::run)
        .collect()
}

pub fn run_one(id: u8) -> Check {
    checks()
        .into_iter()
        .find(|c| c.id == id)
        .expect("known check id")
        .run()
}

struct Tally {
    ok: bool,
    lines: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            ok: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.ok &= ok;
        self.lines
            .push(format!("{}{line}", if ok { "" } else { "✗ " }));
    }

    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check(
            (got - want).abs() <= tol,
            format!("{what} = {got:.6} (want {want:.6} ± {tol:.0e})"),
        );
    }

    fn done(self) -> Outcome {
        Ok((self.ok, self.lines.join("; ")))
    }
}

fn ricker(r: f64) -> Result<(MapSpec<f64>, MapProbe<f64>)> {
    let m = MapSpec::ricker(r)?;
    let p = m.probe()?;
    Ok((m, p))
}

fn c01() -> Outcome {
    let mut t = Tally::new();
    let q = |n: i64, d: i64| ratio::<Rational>(n, d);
    let exact = [
        ("Ψ(2,3)", psi(q(2, 1), q(3, 1))?, q(5, 12)),
        ("Ψ(5,1.4)", psi(q(5, 1), q(7, 5))?, q(5, 12)),
        ("α₀(2.5)", alpha0(q(5, 2))?, q(3, 7)),
        ("α₀(2)", alpha0(q(2, 1))?, q(1, 3)),
        ("β₀(2,1.5)", beta0(q(2, 1), q(3, 2))?, q(4, 15)),
    ];
    for (what, got, want) in exact {
        t.check(got == want, format!("{what} = {got}"));
    }
    // truncated decimals: one unit in the last shown place
    let rounded = [
        ("Ψ(4.75,2)", psi(q(19, 4), q(2, 1))?, 0.49275),
        ("Ψ(6,1.2)", psi(q(6, 1), q(6, 5))?, 0.40259),
        ("Ψ(5,1.7)", psi(q(5, 1), q(17, 10))?, 0.46296),
        ("β₀(2,1.5)", beta0(q(2, 1), q(3, 2))?, 0.2667),
    ];
    for (what, got, want) in rounded {
        let digits = format!("{want}").len() - 2;
        t.near(
            what,
            approx(&got),
            want,
            10f64.powi(-(digits as i32)) + 1e-9,
        );
    }
    t.done()
}

fn c02() -> Outcome {
    let mut t = Tally::new();
    t.near(
        "𝒱(3,2,0.36,0.2)",
        mathcal_v(3.0, 2.0, 0.36, 0.2),
        0.8724,
        5e-4,
    );
    t.done()
}

fn c03() -> Outcome {
    let mut t = Tally::new();
    let m = MapSpec::<f64>::exnotglob();
    let a = 5.0 / 12.0;
    t.near("G²(5/12, 28)", m.controlled2(a, 28.0), 26.7455, 1e-3);
    t.done()
}

fn c04() -> Outcome {
    let mut t = Tally::new();
    let r = bernoulli_region(2.5, 0.368);
    t.near("lower", r.lo, 0.1877, 0.01);
    t.near("upper", r.hi, 0.342, 0.01);
    t.done()
}

fn c05() -> Outcome {
    let mut t = Tally::new();
    let u = uniform_condition(2.5, 0.405, 0.2)?;
    t.check(
        u.sufficient,
        format!("sufficient bound holds: {}", u.sufficient),
    );
    t.check(
        u.expected_log < 0.0,
        format!("E ln 𝓛₀ = {:.6}", u.expected_log),
    );
    t.done()
}

fn c06() -> Outcome {
    let mut t = Tally::new();
    for (r, want) in [(3.5, 3.0 / 7.0), (3.0, 1.0 / 3.0)] {
        let (m, p) = ricker(r)?;
        t.near(
            &format!("β_*(ricker {r})"),
            beta_star(&m, &p)?.value,
            want,
            1e-3,
        );
    }
    let m = MapSpec::<f64>::exnotglob();
    let bs = beta_star(&m, &m.probe()?)?.value;
    t.check(
        bs > 0.417 && bs < 0.464,
        format!("β_*(exnotglob) = {bs:.6} in (0.417, 0.464)"),
    );
    match analyze(&m, None, None)?.refinement {
        Some(r) => t.near("refined α", r.alpha_bar, 0.4630, 1e-3),
        None => t.check(false, "no refinement produced".into()),
    }
    t.done()
}

fn c07() -> Outcome {
    let mut t = Tally::new();
    for (m, exact) in [
        (MapSpec::<f64>::exglob(), exglob_pwl::<Rational>()),
        (MapSpec::<f64>::exnotglob(), exnotglob_pwl::<Rational>()),
    ] {
        let bisect = beta_star(&m, &m.probe()?)?.value;
        match exact_beta_star(&exact, 30) {
            Some(e) => t.near(
                &format!("{} exact vs bisection", m.name),
                bisect,
                approx(&e),
                1e-3,
            ),
            None => t.check(
                false,
                format!("{}: exact oracle found no threshold", m.name),
            ),
        }
    }
    t.done()
}

/// Random `(L⁻, L⁺, α, ℓ)` with every gain factor positive.
fn feasible_tuple(rng: &mut impl Rng) -> (f64, f64, ControlSpec) {
    let lp = rng.random_range(1.2..3.0);
    let lm = rng.random_range(lp..5.0);
    let top = 0.98 * lp / (lp + 1.0);
    let ell = rng.random_range(0.01..0.45 * top);
    let alpha = rng.random_range(ell..top - ell);
    (lm, lp, ControlSpec { alpha, ell })
}

fn c08() -> Outcome {
    let mut t = Tally::new();
    let mut rng = stream(SEED, 0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (lm, lp, c) = feasible_tuple(&mut rng);
        for noise in [NoiseSpec::Bernoulli, NoiseSpec::Uniform] {
            let exact = expected_log_pair(lm, lp, c.alpha, c.ell, &noise)?;
            let mc = empirical_expected_log(lm, lp, c, &noise, 1_000_000, SEED + 1 + i);
            let z = (mc.mean - exact).abs() / mc.std_err;
            worst = worst.max(z);
            if !mc.within(exact, 3.0) {
                t.check(
                    false,
                    format!("{} {lm:.3},{lp:.3},{c:?}: z = {z:.2}", noise.name()),
                );
            }
        }
    }
    t.check(
        worst <= 3.0,
        format!("40 comparisons, worst |z| = {worst:.2}"),
    );
    t.done()
}

fn c09() -> Outcome {
    let mut t = Tally::new();
    let start = Instant::now();
    let alphas = uniform_grid(0.2, 0.5, 61)?;
    for (r, lo, hi) in [(3.0, 0.27, 0.30), (3.5, 0.35, 0.38)] {
        let (m, p) = ricker(r)?;
        let mut cfg = BifurcationConfig::new(0.2, alphas.clone(), SEED);
        cfg.transient = 9_800;
        cfg.samples = 200;
        cfg.paths_per_alpha = 200;
        let b = bifurcation_sweep(&m, &p, &NoiseSpec::Bernoulli, &cfg)?;
        match b.collapse_threshold() {
            Some(a) => t.check(
                a >= lo - 1e-12 && a <= hi + 1e-12,
                format!("ricker {r}: threshold {a:.3} in [{lo}, {hi}]"),
            ),
            None => t.check(false, format!("ricker {r}: no threshold on the grid")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    t.check(secs <= 300.0, format!("{secs:.1} s"));
    t.done()
}

fn c10() -> Outcome {
    let mut t = Tally::new();
    let (m, p) = ricker(3.5)?;
    let mut cfg = BifurcationConfig::new(0.0, uniform_grid(0.3, 0.5, 41)?, SEED);
    cfg.transient = 9_800;
    let b = bifurcation_sweep(&m, &p, &NoiseSpec::Bernoulli, &cfg)?;
    match b.collapse_threshold() {
        Some(a) => t.near("threshold", a, 3.0 / 7.0, 0.005 + 1e-12),
        None => t.check(false, "no threshold on the grid".into()),
    }
    t.done()
}

fn c11() -> Outcome {
    let mut t = Tally::new();
    for l0 in [1.5, 2.0, 2.5, 3.0, 5.0] {
        for noise in [NoiseSpec::Bernoulli, NoiseSpec::Uniform] {
            let g = construct_symmetric_gain(l0, &noise)?;
            let (a, e) = (g.control.alpha, g.control.ell);
            let a0 = alpha0(l0)?;
            let el = expected_log_l0(l0, a, e, &noise)?;
            let ok = a < a0 && a + e > a0 && a + e < l0 / (l0 + 1.0) && el < 0.0;
            t.check(
                ok,
                format!("L₀ {l0} {}: α {a:.4} ℓ {e:.4} E ln {el:.4}", noise.name()),
            );
        }
    }
    t.done()
}

fn c12() -> Outcome {
    let mut t = Tally::new();
    let m = MapSpec::<f64>::quail();
    let curve = check_slope_envelope(&m, &m.probe()?)?;
    t.check(
        curve.max <= 0.4319,
        format!("max envel = {:.7} (α₀ = {:.7})", curve.max, curve.alpha0),
    );
    t.check(curve.holds(), format!("condition holds: {}", curve.holds()));
    t.done()
}

fn property_maps(rng: &mut impl Rng) -> Result<Vec<(MapSpec<f64>, MapProbe<f64>)>> {
    let mut maps = vec![
        MapSpec::quail(),
        MapSpec::switching(),
        MapSpec::exglob(),
        MapSpec::exnotglob(),
    ];
    for _ in 0..12 {
        maps.push(MapSpec::ricker(rng.random_range(1.5..4.0))?);
    }
    maps.into_iter()
        .map(|m| {
            let p = m.probe()?;
            Ok((m, p))
        })
        .collect()
}

fn c13() -> Outcome {
    let mut t = Tally::new();
    let mut rng = stream(SEED, 13);
    let maps = property_maps(&mut rng)?;
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| &maps[rng.random_range(0..maps.len())];

    let mut bad = 0;
    for _ in 0..PROPERTY_CASES {
        let (m, p) = pick(&mut rng);
        let x = rng.random_range(p.f2_m..=p.f_m);
        let b = rng.random_range(0.0..1.0);
        let y = m.controlled(b, x);
        let slack = 1e-9 * p.k.max(1.0);
        bad += usize::from(!(y >= p.f2_m - slack && y <= p.f_m + slack));
    }
    t.check(bad == 0, format!("trap invariance: {bad} failures"));

    let mut bad = 0;
    for _ in 0..PROPERTY_CASES {
        let (m, p) = pick(&mut rng);
        let x = rng.random_range(0.01 * p.k..3.0 * p.k);
        if (x - p.k).abs() < 1e-6 * p.k {
            continue;
        }
        let lo = rng.random_range(1e-3..0.99);
        let hi = rng.random_range(lo + 1e-3..1.0);
        let (f, gb, ga) = (m.f(x), m.controlled(lo, x), m.controlled(hi, x));
        let ok = if x < p.k {
            f > gb && gb > ga && ga > x
        } else {
            f < gb && gb < ga && ga < x
        };
        bad += usize::from(!ok);
    }
    t.check(bad == 0, format!("G ordering: {bad} failures"));

    let mut bad = 0;
    for _ in 0..PROPERTY_CASES {
        let lp: f64 = rng.random_range(0.2..6.0);
        let lm = rng.random_range(lp.max(1.0 / lp)..8.0);
        if lm * lp <= 1.0 + 1e-9 {
            continue;
        }
        let b0 = beta0(lm, lp)?;
        let root = (script_l(lm, b0) * script_l(lp, b0) - 1.0).abs() < 1e-9;
        let b = rng.random_range(0.0..1.0);
        let below = script_l(lm, b) * script_l(lp, b) < 1.0;
        let consistent = (b - b0).abs() < 1e-9 || below == (b > b0);
        bad += usize::from(!(root && consistent));
    }
    t.check(bad == 0, format!("β₀ identity: {bad} failures"));

    let mut bad = 0;
    let sides: Vec<(f64, f64)> = maps
        .iter()
        .map(|(m, p)| {
            let theta = side_theta(p);
            let (a1, a2) = m.side_slopes(p.k, theta);
            (theta, sides_bound(a1, a2))
        })
        .collect();
    for _ in 0..PROPERTY_CASES {
        let i = rng.random_range(0..maps.len());
        let ((m, p), (theta, bound)) = (&maps[i], sides[i]);
        if bound <= 0.0 {
            continue;
        }
        let x = p.k + theta * rng.random_range(-1.0..1.0);
        if x == p.k {
            continue;
        }
        let b = rng.random_range(0.0..0.999 * bound);
        bad += usize::from(!((m.controlled(b, x) - p.k) * (p.k - x) > 0.0));
    }
    t.check(bad == 0, format!("side alternation: {bad} failures"));

    let mut bad = 0;
    for case in 0..PROPERTY_CASES {
        let (m, p) = pick(&mut rng);
        let x0 = rng.random_range(0.05 * p.k..4.0 * p.k);
        let lo = rng.random_range(0.01..0.9);
        let hi = rng.random_range(lo..0.95);
        match trap_bound_violations(m, p, lo, hi, x0, 1, SEED + case as u64) {
            Ok(v) => bad += v as usize,
            Err(e) => {
                bad += 1;
                t.lines
                    .push(format!("trap bound error on {} x0 {x0}: {e}", m.name));
            }
        }
    }
    t.check(bad == 0, format!("trap bound containment: {bad} failures"));
    // the bound is never below one step
    let (m, p) = &maps[0];
    t.check(
        trap_bound(m, p, 0.1, 0.5, p.k)? == 1,
        "trap start counts one step".into(),
    );
    t.done()
}

fn show(a: Option<f64>) -> String {
    a.map_or("none".into(), |a| format!("{a:.3}"))
}

fn c14() -> Outcome {
    let mut t = Tally::new();
    let m = MapSpec::<f64>::switching();
    let p = m.probe()?;
    let bs = beta_star(&m, &p)?.value;
    let starts: Vec<f64> = uniform_grid(0.02 * p.k, 3.0 * p.k, 200)?;
    let alphas = uniform_grid(0.2, 0.35, 31)?;
    match deterministic_threshold(&m, &p, &alphas, &starts, 10_000)? {
        Some(a) => t.near("deterministic collapse", a, 0.266, 0.01),
        None => t.check(false, "no deterministic collapse on the grid".into()),
    }
    let cfg = RasterConfig {
        alpha_grid: uniform_grid(0.05, 0.45, 41)?,
        ell_grid: vec![0.0, 0.05],
        paths: 50,
        horizon: 10_000,
        x0: 0.5 * p.k,
        master_seed: SEED,
    };
    let region = region_raster(
        &m,
        &p,
        &NoiseSpec::Bernoulli,
        region_constants(&m, &p, bs),
        &cfg,
    )?;
    let bad = region.disagreements();
    t.check(
        bad.is_empty(),
        format!("analytic ⇒ empirical: {} violating cells", bad.len()),
    );
    let n = cfg.alpha_grid.len();
    let row = &region.cells[n..];
    let empirical = row
        .iter()
        .rev()
        .take_while(|c| c.rate.is_some_and(|r| r >= 0.99))
        .last()
        .map(|c| c.alpha);
    let analytic = row.iter().find(|c| c.analytic.holds()).map(|c| c.alpha);
    t.lines.push(format!(
        "ℓ = 0.05: empirical collapse {}, analytic boundary {}, β_* = {bs:.4}",
        show(empirical),
        show(analytic)
    ));
    t.done()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique_and_filters_work() {
        let all = checks();
        assert_eq!(all.len(), 14);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.id as usize, i + 1);
        }
        assert!(all.iter().filter(|c| c.matches("ricker")).count() >= 4);
        assert!(all.iter().any(|c| c.matches("12")));
    }

    #[test]
    fn cheap_checks_pass() {
        for id in [1, 2, 3, 4, 7, 11] {
            let c = run_one(id);
            assert!(c.passed, "{} {}", c.name, c.detail);
        }
    }

    #[test]
    fn feasible_tuples_are_feasible() {
        let mut rng = stream(1, 1);
        for _ in 0..1000 {
            let (lm, lp, c) = feasible_tuple(&mut rng);
            c.validate().unwrap();
            assert!(lm >= lp);
            assert!(script_l(lp, c.beta_hi()) > 0.0);
        }
    }
}
