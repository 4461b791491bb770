//! Command-line arguments, the optional JSON config file, and the merged
//! settings each command runs with. A flag always wins over the file, and
//! the file over the built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use skinloc::io::{calibration_from_csv, model_from_csv, read_layout, read_to_string};
use skinloc::{fit_response_model, make_patch_a, make_patch_b, PatchLayout, ResponseModel};

use crate::error::CliError;

pub const DEFAULT_ROWS: usize = 5;
pub const DEFAULT_COLS: usize = 20;
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_COUNTS: [(usize, usize); 4] = [(2, 5), (3, 10), (4, 15), (5, 20)];
pub const DEFAULT_RESOLUTIONS: [u32; 3] = [8, 32, 128];

/// 0.40, 0.45, ..., 0.90.
pub fn default_etas() -> Vec<f64> {
    (0..=10).map(|k| (40 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Parser)]
#[command(name = "skinloc", version, about = "Locate concealed sensors in tactile skin patches from probe logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate point logs for a probe grid
    Simulate(SimulateArgs),
    /// Fit the response model to calibration samples
    Fit(FitArgs),
    /// Signal-to-noise ratio per sensor
    Snr(SnrArgs),
    /// Predict sensor positions from point logs
    Localize(LocalizeArgs),
    /// Prediction error versus probe-grid size
    SweepCount(SweepCountArgs),
    /// Prediction error versus threshold and interpolation resolution
    SweepEtaRes(SweepEtaResArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// patch-a, patch-b, or a layout JSON file
    #[arg(long)]
    pub layout: Option<String>,
    /// Threshold fraction of the map maximum [default: 0.65]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Interpolation density in pixels per centimeter [default: 128]
    #[arg(long)]
    pub ppcm: Option<u32>,
    /// Base random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Primary output file
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AcquisitionArgs {
    /// Probe grid rows [default: 5]
    #[arg(long)]
    pub rows: Option<usize>,
    /// Probe grid columns [default: 20]
    #[arg(long)]
    pub cols: Option<usize>,
    /// Raw samples averaged per point log [default: 50]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Probe placement error radius in mm [default: 2]
    #[arg(long)]
    pub jitter_mm: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Model CSV written by `fit`
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Calibration samples CSV to fit the model to
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
    /// Override the no-contact reading
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Override the peak response above baseline
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Override the distance where the response halves
    #[arg(long)]
    pub half_distance_mm: Option<f64>,
    /// Override the per-sample noise standard deviation
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub acquisition: AcquisitionArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also write the layout used, as JSON
    #[arg(long, value_name = "FILE")]
    pub layout_out: Option<PathBuf>,
    /// Also write raw no-contact samples
    #[arg(long, value_name = "FILE")]
    pub no_contact_out: Option<PathBuf>,
    /// Also write (distance, reading) calibration samples
    #[arg(long, value_name = "FILE")]
    pub calibration_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SnrArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub acquisition: AcquisitionArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Point-log CSV; simulated when omitted together with --no-contact
    #[arg(long, value_name = "FILE")]
    pub logs: Option<PathBuf>,
    /// Raw no-contact samples CSV
    #[arg(long, value_name = "FILE")]
    pub no_contact: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Point-log CSV
    #[arg(long, value_name = "FILE")]
    pub logs: Option<PathBuf>,
    /// Sample count recorded for each log [default: 50]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Per-sensor error table; needs a layout
    #[arg(long, value_name = "FILE")]
    pub errors_out: Option<PathBuf>,
    /// Directory for one interpolated-map CSV per sensor
    #[arg(long, value_name = "DIR")]
    pub maps_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepCountArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub acquisition: AcquisitionArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Probe grids as ROWSxCOLS, comma separated [default: 2x5,3x10,4x15,5x20]
    #[arg(long, value_delimiter = ',', value_parser = parse_grid)]
    pub counts: Option<Vec<(usize, usize)>>,
    /// Seeded trials per cell [default: 10]
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepEtaResArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub acquisition: AcquisitionArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Thresholds, comma separated [default: 0.40 to 0.90 step 0.05]
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Pixels per cm, comma separated [default: 8,32,128]
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Option<Vec<u32>>,
    /// Seeded trials per cell [default: 10]
    #[arg(long)]
    pub trials: Option<usize>,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"));
    Ok((num(r)?, num(c)?))
}

/// Keys accepted in the JSON config file; each mirrors the flag of the same
/// name with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub layout: Option<String>,
    pub eta: Option<f64>,
    pub ppcm: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub samples: Option<usize>,
    pub jitter_mm: Option<f64>,
    pub model: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub baseline: Option<f64>,
    pub amplitude: Option<f64>,
    pub half_distance_mm: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub logs: Option<PathBuf>,
    pub no_contact: Option<PathBuf>,
    pub layout_out: Option<PathBuf>,
    pub no_contact_out: Option<PathBuf>,
    pub calibration_out: Option<PathBuf>,
    pub errors_out: Option<PathBuf>,
    pub maps_dir: Option<PathBuf>,
    pub counts: Option<Vec<String>>,
    pub etas: Option<Vec<f64>>,
    pub resolutions: Option<Vec<u32>>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_to_string(path).map_err(|e| CliError::invalid("invalid_config", e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid("invalid_config", format!("{}: {e}", path.display())))
    }
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn load_layout(source: &str) -> Result<PatchLayout, CliError> {
    match source {
        "patch-a" => Ok(make_patch_a()),
        "patch-b" => Ok(make_patch_b()),
        path => read_layout(Path::new(path)).map_err(CliError::input),
    }
}

/// Shared parameters of the simulation and localization pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub layout: PatchLayout,
    /// Whether the layout came from a flag or the config file.
    pub layout_given: bool,
    pub eta: f64,
    pub ppcm: u32,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub samples: usize,
    pub jitter_mm: f64,
}

impl PipelineSettings {
    pub fn resolve(common: &CommonArgs, acq: &AcquisitionArgs, file: &FileConfig) -> Result<Self, CliError> {
        let layout_source = common.layout.clone().or_else(|| file.layout.clone());
        let s = Self {
            layout_given: layout_source.is_some(),
            layout: load_layout(layout_source.as_deref().unwrap_or("patch-b"))?,
            eta: pick(common.eta, file.eta, skinloc::DEFAULT_ETA),
            ppcm: pick(common.ppcm, file.ppcm, skinloc::DEFAULT_PIXELS_PER_CM),
            seed: pick(common.seed, file.seed, DEFAULT_SEED),
            rows: pick(acq.rows, file.rows, DEFAULT_ROWS),
            cols: pick(acq.cols, file.cols, DEFAULT_COLS),
            samples: pick(acq.samples, file.samples, skinloc::sim::DEFAULT_SAMPLES_PER_LOG),
            jitter_mm: pick(acq.jitter_mm, file.jitter_mm, skinloc::sim::DEFAULT_PROBE_JITTER_MM),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_eta(self.eta)?;
        check_ppcm(self.ppcm)?;
        check_grid(self.rows, self.cols)?;
        if self.samples == 0 {
            return Err(CliError::precondition("samples must be >= 1 (got 0)"));
        }
        if !(self.jitter_mm.is_finite() && self.jitter_mm >= 0.0) {
            return Err(CliError::precondition(format!(
                "jitter_mm must be finite and >= 0 (got {})",
                self.jitter_mm
            )));
        }
        Ok(())
    }
}

pub fn check_eta(eta: f64) -> Result<(), CliError> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(CliError::precondition(format!("eta must lie in (0, 1] (got {eta})")))
    }
}

pub fn check_ppcm(ppcm: u32) -> Result<(), CliError> {
    if ppcm >= 1 {
        Ok(())
    } else {
        Err(CliError::precondition("ppcm must be >= 1 (got 0)"))
    }
}

pub fn check_grid(rows: usize, cols: usize) -> Result<(), CliError> {
    if rows < 2 {
        return Err(CliError::precondition(format!("rows must be >= 2 (got {rows})")));
    }
    if cols < 2 {
        return Err(CliError::precondition(format!("cols must be >= 2 (got {cols})")));
    }
    Ok(())
}

pub fn check_trials(trials: usize) -> Result<(), CliError> {
    if trials >= 1 {
        Ok(())
    } else {
        Err(CliError::precondition("trials must be >= 1 (got 0)"))
    }
}

/// Builds the response model: built-in default, then a model file, then a
/// fit to calibration samples, then individual parameter overrides.
pub fn resolve_model(args: &ModelArgs, file: &FileConfig) -> Result<ResponseModel, CliError> {
    let mut model = ResponseModel::calibrated_default();
    if let Some(path) = args.model.as_ref().or(file.model.as_ref()) {
        let text = read_to_string(path).map_err(CliError::input)?;
        model = model_from_csv(&text).map_err(CliError::input)?;
        model
            .validate()
            .map_err(|e| CliError::invalid("invalid_input", format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = args.calibration.as_ref().or(file.calibration.as_ref()) {
        let text = read_to_string(path).map_err(CliError::input)?;
        let samples = calibration_from_csv(&text).map_err(CliError::input)?;
        model = fit_response_model(&samples, &model).map_err(|e| CliError::invalid("fit", e.to_string()))?;
    }
    let overridden = ResponseModel {
        baseline: args.baseline.or(file.baseline).unwrap_or(model.baseline),
        amplitude: args.amplitude.or(file.amplitude).unwrap_or(model.amplitude),
        half_distance_mm: args.half_distance_mm.or(file.half_distance_mm).unwrap_or(model.half_distance_mm),
        noise_sigma: args.noise_sigma.or(file.noise_sigma).unwrap_or(model.noise_sigma),
    };
    overridden.validate().map_err(|e| CliError::precondition(e.to_string()))?;
    Ok(overridden)
}

pub fn resolve_counts(flag: Option<&Vec<(usize, usize)>>, file: &FileConfig) -> Result<Vec<(usize, usize)>, CliError> {
    let counts = match (flag, &file.counts) {
        (Some(c), _) => c.clone(),
        (None, Some(strs)) => strs
            .iter()
            .map(|s| parse_grid(s))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::invalid("invalid_config", e))?,
        (None, None) => DEFAULT_COUNTS.to_vec(),
    };
    if counts.is_empty() {
        return Err(CliError::precondition("counts must not be empty"));
    }
    for &(r, c) in &counts {
        check_grid(r, c)?;
    }
    Ok(counts)
}
