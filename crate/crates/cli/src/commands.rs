use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use skinloc::io::{
    baseline_from_csv, baseline_to_csv, calibration_from_csv, calibration_to_csv, errors_to_csv,
    interpolated_map_to_csv, layout_to_json, model_to_csv, point_logs_from_csv, point_logs_to_csv,
    predictions_to_csv, read_to_string, snr_to_csv, sweep_to_csv, write_atomic,
};
use skinloc::localize::{point_log_maps, Interpolator};
use skinloc::metrics::summarize;
use skinloc::{
    acquire_baseline, compute_snr, derive_seed, fit_response_model, infer_plan, localize_all, simulate_acquisition,
    sweep_eta_resolution, sweep_point_log_count, uniform_probe_plan, CalibrationSample, ErrorStats,
    LocalizationError, PatchLayout, PointLog, Prediction, ResponseModel, SnrReport, SweepResult, TrialSettings,
};

use crate::config::*;
use crate::error::CliError;

/// Stream index used to seed the no-contact samples of a simulation.
pub const NO_CONTACT_STREAM: u64 = u64::MAX;

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes()).map_err(CliError::output)
}

fn read(path: &Path) -> Result<String, CliError> {
    read_to_string(path).map_err(CliError::input)
}

fn pipeline_error(e: impl std::fmt::Display) -> CliError {
    CliError::runtime("pipeline", e.to_string())
}

/// Simulated point logs and the no-contact samples that go with them.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub layout: PatchLayout,
    pub logs: Vec<PointLog>,
    pub no_contact: Vec<Vec<f64>>,
    pub model: ResponseModel,
}

fn acquire(settings: &PipelineSettings, model: &ResponseModel) -> Result<Acquisition, CliError> {
    let plan = uniform_probe_plan(&settings.layout, settings.rows, settings.cols)
        .map_err(|e| CliError::precondition(e.to_string()))?;
    let logs = simulate_acquisition(
        &settings.layout,
        model,
        &plan,
        settings.samples,
        settings.jitter_mm,
        settings.seed,
    )
    .map_err(pipeline_error)?;
    let no_contact = acquire_baseline(
        &settings.layout,
        model,
        settings.samples.max(2),
        derive_seed(settings.seed, NO_CONTACT_STREAM),
    )
    .map_err(pipeline_error)?;
    Ok(Acquisition {
        layout: settings.layout.clone(),
        logs,
        no_contact,
        model: *model,
    })
}

/// `(nominal probe-to-sensor distance, reading)` for every log and sensor.
pub fn calibration_samples(layout: &PatchLayout, logs: &[PointLog]) -> Vec<CalibrationSample> {
    let sensors = layout.sensors();
    logs.iter()
        .flat_map(|l| {
            sensors
                .positions_mm()
                .iter()
                .zip(&l.readings)
                .map(move |(s, &reading)| CalibrationSample {
                    distance_mm: s.distance(&l.probe_mm),
                    reading,
                })
        })
        .collect()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Acquisition, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = PipelineSettings::resolve(&args.common, &args.acquisition, &file)?;
    let model = resolve_model(&args.model, &file)?;
    let out = args
        .common
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| CliError::invalid("invalid_arguments", "simulate needs --out"))?;
    let acq = acquire(&settings, &model)?;
    write(&out, &point_logs_to_csv(&acq.logs))?;
    if let Some(p) = args.layout_out.as_ref().or(file.layout_out.as_ref()) {
        write(p, &layout_to_json(&acq.layout))?;
    }
    if let Some(p) = args.no_contact_out.as_ref().or(file.no_contact_out.as_ref()) {
        write(p, &baseline_to_csv(&acq.no_contact))?;
    }
    if let Some(p) = args.calibration_out.as_ref().or(file.calibration_out.as_ref()) {
        write(p, &calibration_to_csv(&calibration_samples(&acq.layout, &acq.logs)))?;
    }
    Ok(acq)
}

pub fn cmd_fit(args: &FitArgs) -> Result<ResponseModel, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let path = args
        .model
        .calibration
        .clone()
        .or_else(|| file.calibration.clone())
        .ok_or_else(|| CliError::invalid("invalid_arguments", "fit needs --calibration"))?;
    let initial = resolve_model(
        &ModelArgs {
            calibration: None,
            ..args.model.clone()
        },
        &FileConfig {
            calibration: None,
            ..file.clone()
        },
    )?;
    let samples = calibration_from_csv(&read(&path)?).map_err(CliError::input)?;
    let model = fit_response_model(&samples, &initial).map_err(|e| CliError::invalid("fit", e.to_string()))?;
    if let Some(out) = args.common.out.as_ref().or(file.out.as_ref()) {
        write(out, &model_to_csv(&model))?;
    }
    Ok(model)
}

pub fn cmd_snr(args: &SnrArgs) -> Result<SnrReport, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let logs_path = args.logs.as_ref().or(file.logs.as_ref());
    let base_path = args.no_contact.as_ref().or(file.no_contact.as_ref());
    let (logs, no_contact) = match (logs_path, base_path) {
        (Some(l), Some(b)) => {
            let samples = pick(args.acquisition.samples, file.samples, skinloc::sim::DEFAULT_SAMPLES_PER_LOG);
            let logs = point_logs_from_csv(&read(l)?, samples).map_err(CliError::input)?;
            let base = baseline_from_csv(&read(b)?).map_err(CliError::input)?;
            (logs, base)
        }
        (None, None) => {
            let settings = PipelineSettings::resolve(&args.common, &args.acquisition, &file)?;
            let model = resolve_model(&args.model, &file)?;
            let acq = acquire(&settings, &model)?;
            (acq.logs, acq.no_contact)
        }
        _ => {
            return Err(CliError::invalid(
                "invalid_arguments",
                "--logs and --no-contact must be given together",
            ))
        }
    };
    let report = compute_snr(&no_contact, &logs).map_err(|e| CliError::invalid("invalid_input", e.to_string()))?;
    if let Some(out) = args.common.out.as_ref().or(file.out.as_ref()) {
        write(out, &snr_to_csv(&report))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeOutcome {
    /// Indexed by sensor id.
    pub predictions: Vec<Result<Prediction, LocalizationError>>,
    /// Error statistics over the sensors that were located, when a layout
    /// supplied ground truth.
    pub stats: Option<ErrorStats>,
}

impl LocalizeOutcome {
    pub fn located(&self) -> Vec<Prediction> {
        self.predictions.iter().filter_map(|p| p.as_ref().ok().copied()).collect()
    }

    pub fn failed(&self) -> Vec<usize> {
        self.predictions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_err())
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn cmd_localize(args: &LocalizeArgs) -> Result<LocalizeOutcome, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let eta = pick(args.common.eta, file.eta, skinloc::DEFAULT_ETA);
    let ppcm = pick(args.common.ppcm, file.ppcm, skinloc::DEFAULT_PIXELS_PER_CM);
    check_eta(eta)?;
    check_ppcm(ppcm)?;
    let logs_path = args
        .logs
        .clone()
        .or_else(|| file.logs.clone())
        .ok_or_else(|| CliError::invalid("invalid_arguments", "localize needs --logs"))?;
    let samples = pick(args.samples, file.samples, skinloc::sim::DEFAULT_SAMPLES_PER_LOG);
    let logs = point_logs_from_csv(&read(&logs_path)?, samples).map_err(CliError::input)?;
    let plan = infer_plan(&logs).map_err(|e| CliError::invalid("invalid_input", e.to_string()))?;
    let layout = match args.common.layout.as_ref().or(file.layout.as_ref()) {
        Some(source) => Some(load_layout(source)?),
        None => None,
    };
    let errors_out = args.errors_out.as_ref().or(file.errors_out.as_ref());
    if errors_out.is_some() && layout.is_none() {
        return Err(CliError::invalid("invalid_arguments", "--errors-out needs --layout"));
    }

    let predictions = match &layout {
        Some(l) => localize_all(&logs, &plan, l, eta, ppcm),
        None => skinloc::localize::localize_logs(&logs, &plan, eta, ppcm),
    }
    .map_err(|e| CliError::invalid("invalid_input", e.to_string()))?;

    let stats = layout.as_ref().map(|l| {
        let truth = l.sensors();
        let per_sensor: Vec<f64> = predictions
            .iter()
            .zip(truth.positions_mm())
            .map(|(p, t)| p.as_ref().map_or(f64::NAN, |p| p.position_mm.distance(t)))
            .collect();
        let located: Vec<f64> = per_sensor.iter().copied().filter(|e| !e.is_nan()).collect();
        ErrorStats {
            per_sensor_error_mm: per_sensor,
            ..summarize(located)
        }
    });
    let outcome = LocalizeOutcome { predictions, stats };
    let located = outcome.located();

    if let Some(out) = args.common.out.as_ref().or(file.out.as_ref()) {
        write(out, &predictions_to_csv(&located))?;
    }
    if let (Some(path), Some(l), Some(stats)) = (errors_out, &layout, &outcome.stats) {
        write(path, &errors_to_csv(&located, l.sensors().positions_mm(), stats))?;
    }
    if let Some(dir) = args.maps_dir.as_ref().or(file.maps_dir.as_ref()) {
        write_maps(dir, &logs, &plan, ppcm)?;
    }
    Ok(outcome)
}

fn write_maps(dir: &PathBuf, logs: &[PointLog], plan: &skinloc::ProbePlan, ppcm: u32) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime("io", format!("{}: {e}", dir.display())))?;
    let maps = point_log_maps(logs, plan).map_err(pipeline_error)?;
    let interp = Interpolator::for_plan(plan, ppcm).map_err(pipeline_error)?;
    for map in &maps {
        let m = interp.apply(map).map_err(pipeline_error)?;
        write(&dir.join(format!("sensor_{}.csv", map.sensor_id)), &interpolated_map_to_csv(&m))?;
    }
    Ok(())
}

fn trial_settings(settings: &PipelineSettings) -> TrialSettings {
    TrialSettings {
        n_samples: settings.samples,
        probe_jitter_mm: settings.jitter_mm,
    }
}

pub fn cmd_sweep_count(args: &SweepCountArgs) -> Result<SweepResult, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = PipelineSettings::resolve(&args.common, &args.acquisition, &file)?;
    let model = resolve_model(&args.model, &file)?;
    let counts = resolve_counts(args.counts.as_ref(), &file)?;
    let trials = pick(args.trials, file.trials, DEFAULT_TRIALS);
    check_trials(trials)?;
    let result = sweep_point_log_count(
        &settings.layout,
        &model,
        &counts,
        settings.eta,
        settings.ppcm,
        trial_settings(&settings),
        trials,
        settings.seed,
    )
    .map_err(pipeline_error)?;
    if let Some(out) = args.common.out.as_ref().or(file.out.as_ref()) {
        write(out, &sweep_to_csv(&result))?;
    }
    Ok(result)
}

pub fn cmd_sweep_eta_res(args: &SweepEtaResArgs) -> Result<SweepResult, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = PipelineSettings::resolve(&args.common, &args.acquisition, &file)?;
    let model = resolve_model(&args.model, &file)?;
    let etas = args.etas.clone().or_else(|| file.etas.clone()).unwrap_or_else(default_etas);
    let resolutions = args
        .resolutions
        .clone()
        .or_else(|| file.resolutions.clone())
        .unwrap_or_else(|| DEFAULT_RESOLUTIONS.to_vec());
    let trials = pick(args.trials, file.trials, DEFAULT_TRIALS);
    if etas.is_empty() || resolutions.is_empty() {
        return Err(CliError::precondition("etas and resolutions must not be empty"));
    }
    etas.iter().try_for_each(|&e| check_eta(e))?;
    resolutions.iter().try_for_each(|&r| check_ppcm(r))?;
    check_trials(trials)?;
    let result = sweep_eta_resolution(
        &settings.layout,
        &model,
        (settings.rows, settings.cols),
        &etas,
        &resolutions,
        trial_settings(&settings),
        trials,
        settings.seed,
    )
    .map_err(pipeline_error)?;
    if let Some(out) = args.common.out.as_ref().or(file.out.as_ref()) {
        write(out, &sweep_to_csv(&result))?;
    }
    Ok(result)
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn sweep_summary(result: &SweepResult) -> Value {
    let cells: Vec<Value> = result
        .cells
        .iter()
        .map(|c| {
            json!({
                "param1": c.param1,
                "param2": c.param2,
                "mean_sigma_pe_mm": c.mean_sigma_pe_mm,
                "failed_trials": c.trials.iter().filter(|t| t.is_err()).count(),
            })
        })
        .collect();
    json!({ "cells": cells })
}

/// Runs a parsed command and returns the one-line JSON summary for standard
/// output, plus any warnings for standard error.
pub fn execute(command: &Command) -> Result<(Value, Vec<String>), CliError> {
    let mut warnings = Vec::new();
    let summary = match command {
        Command::Simulate(a) => {
            let acq = cmd_simulate(a)?;
            json!({
                "point_logs": acq.logs.len(),
                "sensors": acq.layout.sensor_count(),
            })
        }
        Command::Fit(a) => {
            let m = cmd_fit(a)?;
            json!({
                "baseline": m.baseline,
                "amplitude": m.amplitude,
                "half_distance_mm": m.half_distance_mm,
                "noise_sigma": m.noise_sigma,
            })
        }
        Command::Snr(a) => {
            let r = cmd_snr(a)?;
            let undefined: Vec<usize> = r
                .per_sensor_db
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_err())
                .map(|(i, _)| i)
                .collect();
            if !undefined.is_empty() {
                warnings.push(format!("SNR undefined for sensors {undefined:?}"));
            }
            json!({ "mean_snr_db": r.mean_db, "sensors": r.per_sensor_db.len(), "undefined": undefined })
        }
        Command::Localize(a) => {
            let o = cmd_localize(a)?;
            for (id, p) in o.predictions.iter().enumerate() {
                if let Err(e) = p {
                    warnings.push(format!("sensor {id} not located: {e}"));
                }
            }
            let mut s = json!({
                "sensors": o.predictions.len(),
                "located": o.located().len(),
                "failed": o.failed(),
            });
            if let Some(st) = &o.stats {
                s["sigma_pe_mm"] = finite_or_null(st.sigma_pe_mm);
                s["mean_error_mm"] = finite_or_null(st.mean_error_mm);
                s["rms_error_mm"] = finite_or_null(st.rms_error_mm);
            }
            s
        }
        Command::SweepCount(a) => sweep_summary(&cmd_sweep_count(a)?),
        Command::SweepEtaRes(a) => sweep_summary(&cmd_sweep_eta_res(a)?),
    };
    Ok((summary, warnings))
}
