mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use pbc_core::dynamics::{path_stats, run_trajectory, write_trajectory_csv, SimConfig};
use pbc_core::maps::{MapSpec, PiecewiseLinear, CATALOG};
use pbc_core::noise::NoiseSpec;
use pbc_core::stability::{
    alpha0, analyze, beta_star, check_slope_envelope, envelope_curve, region_constants, ControlSpec,
};
use pbc_core::sweep::{
    bifurcation_sweep, region_raster, uniform_grid, write_bifurcation_csv, write_envelope_csv,
    write_rates_csv, write_region_csv, BifurcationConfig, RasterConfig,
};
use pbc_core::verify;
use serde::Serialize;
use serde_json::{json, Value};

use config::{ExperimentConfig, NoiseField};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_ERROR: u8 = 1;

fn catalogue() -> String {
    let mut s = String::from("Built-in maps:\n");
    for (name, params, about) in CATALOG {
        let head = if params.is_empty() {
            name.to_string()
        } else {
            format!("{name} {params}")
        };
        s.push_str(&format!("  {head:<20} {about}\n"));
    }
    s.push_str("  <file>.json          piecewise-linear map: {\"segments\":[{\"lo\",\"hi\",\"slope\",\"intercept\"}...],\"tail\":c}\n");
    s.push_str("\nExit codes: 0 success, 2 infeasible configuration, 1 any other error.");
    s
}

#[derive(Parser)]
#[command(name = "pbc", version, about = "Noisy prediction-based control of one-dimensional maps", after_help = catalogue())]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file (or a sidecar from an earlier run); flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ExperimentConfig,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Eq)]
enum Command {
    /// Structural constants, gain thresholds, certificates and noise regions
    Analyze,
    /// Simulate paths of the controlled map and classify them
    Simulate,
    /// Post-transient states over an α grid at fixed ℓ
    Bifurcate,
    /// Analytic verdicts and empirical convergence rates on an (α, ℓ) grid
    Region,
    /// The derivative envelope curve on [x_max, K)
    Envelope,
    /// Run the acceptance checks
    Verify {
        /// Only checks whose id, name or tag contains this
        #[arg(long)]
        filter: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Bifurcate => "bifurcate",
            Command::Region => "region",
            Command::Envelope => "envelope",
            Command::Verify { .. } => "verify",
        }
    }

    fn default_out(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze.json",
            Command::Simulate => "trajectory.csv",
            Command::Bifurcate => "bifurcation.csv",
            Command::Region => "region.csv",
            Command::Envelope => "envelope.csv",
            Command::Verify { .. } => "verify.json",
        }
    }

    fn random(&self) -> bool {
        matches!(
            self,
            Command::Simulate | Command::Bifurcate | Command::Region
        )
    }
}

/// What a command produced, for the sidecar.
struct Run {
    outputs: Vec<PathBuf>,
    summary: Value,
    failed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_ERROR),
        Err(e) => {
            let core = e.chain().find_map(|c| c.downcast_ref::<pbc_core::Error>());
            let infeasible = core.is_some_and(|c| c.is_infeasible());
            let code = if infeasible {
                EXIT_INFEASIBLE
            } else {
                EXIT_ERROR
            };
            let kind = if infeasible { "infeasible" } else { "error" };
            let diag = json!({ "status": kind, "exit": code, "message": format!("{e:#}") });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = cli.flags.over(&file);
    if cfg.seed.is_none() && cli.command.random() {
        let seed: u64 = rand::random();
        eprintln!("seed = {seed}");
        cfg.seed = Some(seed);
    }
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(cli.command.default_out()));
    cfg.out = Some(out.clone());
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cfg.workers = Some(workers);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("starting worker pool")?;

    let result = match &cli.command {
        Command::Analyze => cmd_analyze(&mut cfg, &out),
        Command::Simulate => cmd_simulate(&mut cfg, &out),
        Command::Bifurcate => cmd_bifurcate(&mut cfg, &out),
        Command::Region => cmd_region(&mut cfg, &out),
        Command::Envelope => cmd_envelope(&mut cfg, &out),
        Command::Verify { filter } => cmd_verify(filter.as_deref(), &out),
    };
    let (status, outputs, summary) = match &result {
        Ok(run) => (
            if run.failed { "failed" } else { "ok" },
            run.outputs.clone(),
            run.summary.clone(),
        ),
        Err(e) => ("error", Vec::new(), json!({ "message": format!("{e:#}") })),
    };
    let meta = json!({
        "subcommand": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "argv": std::env::args().collect::<Vec<_>>(),
        "status": status,
        "config": cfg,
        "outputs": outputs,
        "summary": summary,
    });
    write_json(&sidecar_path(&out), &meta)?;
    result.map(|run| run.failed)
}

/// Prints to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_map(cfg: &ExperimentConfig) -> Result<MapSpec<f64>> {
    let spec = cfg.map_spec()?;
    if spec.ends_with(".json") {
        let path = Path::new(&spec);
        let text = std::fs::read_to_string(path).with_context(|| format!("reading map {spec}"))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("piecewise");
        return Ok(MapSpec::piecewise(name, PiecewiseLinear::from_json(&text)?));
    }
    Ok(MapSpec::parse(&spec)?)
}

fn noise(cfg: &mut ExperimentConfig) -> Result<NoiseSpec> {
    let n = cfg
        .noise
        .clone()
        .unwrap_or(NoiseField::Name("bernoulli".into()))
        .resolve()?;
    cfg.noise = Some(NoiseField::Spec(n.clone()));
    Ok(n)
}

fn control(cfg: &mut ExperimentConfig) -> Result<ControlSpec> {
    let alpha = cfg.alpha.ok_or_else(|| anyhow!("--alpha is required"))?;
    let ell = *cfg.ell.get_or_insert(0.0);
    Ok(ControlSpec::new(alpha, ell)?)
}

fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    Ok(uniform_grid(lo, hi, n)?)
}

fn cmd_analyze(cfg: &mut ExperimentConfig, out: &Path) -> Result<Run> {
    let map = load_map(cfg)?;
    let noise = match cfg.noise {
        Some(_) => Some(noise(cfg)?),
        None => None,
    };
    let control = match cfg.alpha {
        Some(_) => Some(control(cfg)?),
        None => None,
    };
    let report = analyze(&map, noise.as_ref(), control)?;
    emit(&serde_json::to_string_pretty(&report)?)?;
    write_json(out, &report)?;
    let summary = json!({
        "k": report.probe.k,
        "alpha0": report.constants.alpha0,
        "beta0": report.constants.beta0,
        "beta_star": report.constants.beta_star.value,
    });
    Ok(Run {
        outputs: vec![out.into()],
        summary,
        failed: false,
    })
}

fn cmd_simulate(cfg: &mut ExperimentConfig, out: &Path) -> Result<Run> {
    let map = load_map(cfg)?;
    let noise = noise(cfg)?;
    let control = control(cfg)?;
    let probe = map.probe()?;
    let x0 = *cfg.x0.get_or_insert(0.5);
    let steps = *cfg.steps.get_or_insert(10_000);
    let paths = *cfg.paths.get_or_insert(1);
    let seed = cfg.seed.expect("seed resolved");
    let path = run_trajectory(
        &map,
        &probe,
        control,
        &noise,
        x0,
        &SimConfig::new(steps),
        seed,
        0,
    )?;
    write_trajectory_csv(create(out)?, &path)?;
    let stats = if paths > 1 {
        Some(path_stats(
            &map, &probe, control, &noise, x0, steps, paths, seed, 0,
        )?)
    } else {
        None
    };
    eprintln!(
        "path 0: {:?}, |x − K| = {:.3e}{}",
        path.verdict,
        path.residual,
        stats.map_or(String::new(), |s| format!(
            "; {paths} paths, rate {:.4}",
            s.rate()
        ))
    );
    let summary = json!({
        "k": probe.k,
        "verdict": path.verdict,
        "residual": path.residual,
        "steps_to_trap": path.steps_to_trap,
        "violations": path.violations,
        "stats": stats,
    });
    Ok(Run {
        outputs: vec![out.into()],
        summary,
        failed: false,
    })
}

fn cmd_bifurcate(cfg: &mut ExperimentConfig, out: &Path) -> Result<Run> {
    let map = load_map(cfg)?;
    let noise = noise(cfg)?;
    let probe = map.probe()?;
    let ell = *cfg.ell.get_or_insert(0.0);
    let lo = *cfg.alpha_min.get_or_insert(0.0);
    let hi = *cfg.alpha_max.get_or_insert(0.99);
    let n = *cfg.alpha_steps.get_or_insert(100);
    let mut b = BifurcationConfig::new(ell, grid(lo, hi, n)?, cfg.seed.expect("seed resolved"));
    b.transient = *cfg.transient.get_or_insert(b.transient);
    b.samples = *cfg.samples.get_or_insert(b.samples);
    b.paths_per_alpha = *cfg.paths.get_or_insert(b.paths_per_alpha);
    b.x0 = *cfg.x0.get_or_insert(b.x0);
    let table = bifurcation_sweep(&map, &probe, &noise, &b)?;
    write_bifurcation_csv(create(out)?, &table)?;
    let rates = out.with_extension("rates.csv");
    write_rates_csv(create(&rates)?, &table)?;
    let threshold = table.collapse_threshold();
    eprintln!(
        "collapse threshold: {}",
        threshold.map_or("none on grid".into(), |a| format!("{a}"))
    );
    let summary = json!({ "collapse_threshold": threshold, "k": probe.k });
    Ok(Run {
        outputs: vec![out.into(), rates],
        summary,
        failed: false,
    })
}

fn cmd_region(cfg: &mut ExperimentConfig, out: &Path) -> Result<Run> {
    let map = load_map(cfg)?;
    let noise = noise(cfg)?;
    let probe = map.probe()?;
    let alphas = grid(
        *cfg.alpha_min.get_or_insert(0.0),
        *cfg.alpha_max.get_or_insert(0.99),
        *cfg.alpha_steps.get_or_insert(100),
    )?;
    let ells = grid(
        *cfg.ell_min.get_or_insert(0.0),
        *cfg.ell_max.get_or_insert(0.5),
        *cfg.ell_steps.get_or_insert(100),
    )?;
    let bs = beta_star(&map, &probe)?.value;
    let raster = RasterConfig {
        alpha_grid: alphas,
        ell_grid: ells,
        paths: *cfg.paths.get_or_insert(200),
        horizon: *cfg.steps.get_or_insert(10_000),
        x0: *cfg.x0.get_or_insert(0.5),
        master_seed: cfg.seed.expect("seed resolved"),
    };
    let region = region_raster(
        &map,
        &probe,
        &noise,
        region_constants(&map, &probe, bs),
        &raster,
    )?;
    write_region_csv(create(out)?, &region)?;
    let disagree: Vec<(f64, f64)> = region
        .disagreements()
        .iter()
        .map(|c| (c.alpha, c.ell))
        .collect();
    eprintln!(
        "{} cells, {} analytic-but-not-empirical, {} empirical-only",
        region.cells.len(),
        disagree.len(),
        region.empirical_only().len()
    );
    let summary = json!({
        "beta_star": bs,
        "constants": region.constants,
        "disagreements": disagree,
        "empirical_only": region.empirical_only().len(),
        "analytic_boundary": region.analytic_boundary(),
    });
    Ok(Run {
        outputs: vec![out.into()],
        summary,
        failed: false,
    })
}

fn cmd_envelope(cfg: &mut ExperimentConfig, out: &Path) -> Result<Run> {
    let map = load_map(cfg)?;
    let probe = map.probe()?;
    let curve = match cfg.alpha0 {
        Some(a) => envelope_curve(&map, &probe, a)?,
        None => {
            let l0 = probe
                .l0
                .ok_or_else(|| anyhow!("map is not smooth at K; pass --alpha0"))?;
            cfg.alpha0 = Some(alpha0(l0)?);
            check_slope_envelope(&map, &probe)?
        }
    };
    write_envelope_csv(create(out)?, &curve)?;
    eprintln!(
        "max envel = {:.7} at x = {:.6}; gain {:.7}",
        curve.max, curve.argmax, curve.alpha0
    );
    let summary = json!({
        "alpha0": curve.alpha0,
        "max": curve.max,
        "argmax": curve.argmax,
        "below_gain": curve.holds(),
    });
    Ok(Run {
        outputs: vec![out.into()],
        summary,
        failed: false,
    })
}

fn cmd_verify(filter: Option<&str>, out: &Path) -> Result<Run> {
    let results = verify::run(filter);
    if results.is_empty() {
        bail!("no check matches {:?}", filter.unwrap_or(""));
    }
    let mut table = format!(
        "{:>3}  {:<6} {:<30} {:>7}  detail\n",
        "id", "status", "check", "seconds"
    );
    for c in &results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        table.push_str(&format!(
            "{:>3}  {status:<6} {:<30} {:>7.1}  {}\n",
            c.id, c.name, c.seconds, c.detail
        ));
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    table.push_str(&format!(
        "{} passed, {failed} failed",
        results.len() - failed
    ));
    emit(&table)?;
    write_json(out, &results)?;
    let summary = json!({ "filter": filter, "passed": results.len() - failed, "failed": failed });
    Ok(Run {
        outputs: vec![out.into()],
        summary,
        failed: failed > 0,
    })
}
