//! Experiment configuration: command-line flags over a JSON file over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use pbc_core::noise::NoiseSpec;
use serde::{Deserialize, Serialize};

/// Noise given by name (`"uniform"`) or as a full JSON law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseField {
    Name(String),
    Spec(NoiseSpec),
}

impl NoiseField {
    pub fn resolve(&self) -> Result<NoiseSpec> {
        let n = match self {
            NoiseField::Name(s) => NoiseSpec::parse(s)?,
            NoiseField::Spec(n) => n.clone(),
        };
        n.validate()?;
        Ok(n)
    }
}

/// Every knob a subcommand may read. Unset fields fall through to the next source.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Map name with optional parameters, e.g. "ricker r=3.5", or a piecewise-linear JSON file
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    /// Extra map parameter key=value (repeatable)
    #[arg(long = "param", global = true, value_name = "K=V")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    /// Noise law: bernoulli, uniform, or a JSON law such as
    /// '{"kind":"discrete","atoms":[[1,0.3],[0.5,0.2]]}'
    #[arg(long, global = true, value_parser = parse_noise)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseField>,
    /// Mean gain α
    #[arg(long, global = true, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Noise amplitude ℓ
    #[arg(long, global = true, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Initial state
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Horizon in steps
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Independent paths (per α or per cell for sweeps)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    /// Master seed; drawn from entropy and printed when omitted
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output file; the metadata sidecar goes next to it as <out>.meta.json
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    /// Number of α grid points
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_steps: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_min: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_max: Option<f64>,
    /// Number of ℓ grid points
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_steps: Option<usize>,
    /// Steps discarded before sampling in bifurcation runs
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient: Option<usize>,
    /// States kept per path after the transient
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Gain for the envelope curve (default: the map's α₀)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
}

fn parse_noise(s: &str) -> std::result::Result<NoiseField, String> {
    NoiseSpec::parse(s)
        .map(NoiseField::Spec)
        .map_err(|e| e.to_string())
}

macro_rules! overlay {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        ExperimentConfig {
            $($f: $hi.$f.clone().or_else(|| $lo.$f.clone()),)*
            params: if $hi.params.is_empty() { $lo.params.clone() } else { $hi.params.clone() },
        }
    };
}

impl ExperimentConfig {
    /// Reads a config file; a sidecar written by an earlier run is accepted too.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let inner = match value.get("config") {
            Some(c) if value.get("subcommand").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).with_context(|| format!("config {}", path.display()))
    }

    /// Fields set in `self` win over `lower`.
    pub fn over(&self, lower: &Self) -> Self {
        overlay!(self, lower; map, noise, alpha, ell, x0, steps, paths, seed, out, workers,
            alpha_min, alpha_max, alpha_steps, ell_min, ell_max, ell_steps, transient, samples, alpha0)
    }

    pub fn map_spec(&self) -> Result<String> {
        let Some(map) = &self.map else {
            bail!("no map given; use --map (see `pbc --help` for the catalogue)")
        };
        let mut spec = map.clone();
        for p in &self.params {
            spec.push(' ');
            spec.push_str(p);
        }
        Ok(spec)
    }
}
