//! Seeded error-analysis sweeps over point-log count and over threshold
//! times interpolation resolution.
//!
//! Trial `t` of every cell uses the seed `derive_seed(seed, t)`, so cells see
//! the same random draws and differ only in the swept parameters.

use rayon::prelude::*;
use thiserror::Error;

use crate::layout::{uniform_probe_plan, LayoutError, PatchLayout, ProbePlan};
use crate::localize::{localize_maps, point_log_maps, Interpolator, LocalizationError, Prediction};
use crate::metrics::{error_stats, ErrorStats, MetricsError};
use crate::response::ResponseCurve;
use crate::sim::{derive_seed, simulate_acquisition, PointLog, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("sweep axis {0} is empty")]
    EmptyAxis(&'static str),
}

/// Acquisition settings shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSettings {
    pub n_samples: usize,
    pub probe_jitter_mm: f64,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            n_samples: crate::sim::DEFAULT_SAMPLES_PER_LOG,
            probe_jitter_mm: crate::sim::DEFAULT_PROBE_JITTER_MM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// `param1` = grid rows, `param2` = grid columns.
    PointLogCount,
    /// `param1` = eta, `param2` = pixels per cm.
    EtaResolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub param1: f64,
    pub param2: f64,
    /// sigma_PE of every trial, or the error that stopped it.
    pub trials: Vec<Result<f64, String>>,
    /// Mean over successful trials; `None` when every trial failed.
    pub mean_sigma_pe_mm: Option<f64>,
}

impl SweepCell {
    fn new(param1: f64, param2: f64, trials: Vec<Result<f64, String>>) -> Self {
        let ok: Vec<f64> = trials.iter().filter_map(|t| t.as_ref().ok().copied()).collect();
        let mean_sigma_pe_mm = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
        Self {
            param1,
            param2,
            trials,
            mean_sigma_pe_mm,
        }
    }

    pub fn failed(&self) -> bool {
        self.trials.iter().any(|t| t.is_err())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub cells: Vec<SweepCell>,
    pub trial_seeds: Vec<u64>,
}

impl SweepResult {
    pub fn cell(&self, param1: f64, param2: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.param1 == param1 && c.param2 == param2)
    }
}

/// Every sensor prediction, or the first per-sensor failure.
fn all_predictions(
    preds: Vec<Result<Prediction, LocalizationError>>,
) -> Result<Vec<Prediction>, LocalizationError> {
    preds.into_iter().collect()
}

/// Acquisition, localization and error statistics for one seeded run.
pub fn run_pipeline<M: ResponseCurve + ?Sized>(
    layout: &PatchLayout,
    model: &M,
    plan: &ProbePlan,
    eta: f64,
    pixels_per_cm: u32,
    settings: TrialSettings,
    seed: u64,
) -> Result<ErrorStats, PipelineError> {
    let logs = simulate_acquisition(layout, model, plan, settings.n_samples, settings.probe_jitter_mm, seed)?;
    let preds = crate::localize::localize_all(&logs, plan, layout, eta, pixels_per_cm)?;
    Ok(error_stats(&all_predictions(preds)?, &layout.sensors())?)
}

fn trial_seeds(seed: u64, trials: usize) -> Result<Vec<u64>, PipelineError> {
    if trials == 0 {
        return Err(PipelineError::NoTrials);
    }
    Ok((0..trials as u64).map(|t| derive_seed(seed, t)).collect())
}

/// sigma_PE versus probe-grid size.
pub fn sweep_point_log_count<M: ResponseCurve + ?Sized>(
    layout: &PatchLayout,
    model: &M,
    counts: &[(usize, usize)],
    eta: f64,
    pixels_per_cm: u32,
    settings: TrialSettings,
    trials: usize,
    seed: u64,
) -> Result<SweepResult, PipelineError> {
    if counts.is_empty() {
        return Err(PipelineError::EmptyAxis("counts"));
    }
    let seeds = trial_seeds(seed, trials)?;
    let plans = counts
        .iter()
        .map(|&(r, c)| uniform_probe_plan(layout, r, c))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = counts
        .par_iter()
        .zip(&plans)
        .map(|(&(rows, cols), plan)| {
            let outcomes = seeds
                .iter()
                .map(|&s| {
                    run_pipeline(layout, model, plan, eta, pixels_per_cm, settings, s)
                        .map(|st| st.sigma_pe_mm)
                        .map_err(|e| e.to_string())
                })
                .collect();
            SweepCell::new(rows as f64, cols as f64, outcomes)
        })
        .collect();
    Ok(SweepResult {
        kind: SweepKind::PointLogCount,
        cells,
        trial_seeds: seeds,
    })
}

/// sigma_PE over the Cartesian product of thresholds and resolutions on a
/// fixed `grid = (rows, cols)` probe plan. Cells are ordered eta-major.
pub fn sweep_eta_resolution<M: ResponseCurve + ?Sized>(
    layout: &PatchLayout,
    model: &M,
    grid: (usize, usize),
    etas: &[f64],
    resolutions: &[u32],
    settings: TrialSettings,
    trials: usize,
    seed: u64,
) -> Result<SweepResult, PipelineError> {
    if etas.is_empty() {
        return Err(PipelineError::EmptyAxis("etas"));
    }
    if resolutions.is_empty() {
        return Err(PipelineError::EmptyAxis("resolutions"));
    }
    if let Some(&bad) = etas.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(LocalizationError::Eta(bad).into());
    }
    let seeds = trial_seeds(seed, trials)?;
    let plan = uniform_probe_plan(layout, grid.0, grid.1)?;
    let interpolators = resolutions
        .iter()
        .map(|&r| Interpolator::for_plan(&plan, r))
        .collect::<Result<Vec<_>, _>>()?;
    let truth = layout.sensors();

    // outcome[trial][res][eta]
    let outcome: Vec<Vec<Vec<Result<f64, String>>>> = seeds
        .iter()
        .map(|&s| {
            let logs: Vec<PointLog> = match simulate_acquisition(
                layout,
                model,
                &plan,
                settings.n_samples,
                settings.probe_jitter_mm,
                s,
            ) {
                Ok(l) => l,
                Err(e) => return vec![vec![Err(e.to_string()); etas.len()]; resolutions.len()],
            };
            let maps = match point_log_maps(&logs, &plan) {
                Ok(m) => m,
                Err(e) => return vec![vec![Err(e.to_string()); etas.len()]; resolutions.len()],
            };
            interpolators
                .iter()
                .map(|interp| match localize_maps(&maps, interp, etas) {
                    Ok(per_eta) => per_eta
                        .into_iter()
                        .map(|preds| {
                            all_predictions(preds)
                                .map_err(|e| e.to_string())
                                .and_then(|p| error_stats(&p, &truth).map_err(|e| e.to_string()))
                                .map(|st| st.sigma_pe_mm)
                        })
                        .collect(),
                    Err(e) => vec![Err(e.to_string()); etas.len()],
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::with_capacity(etas.len() * resolutions.len());
    for (e, &eta) in etas.iter().enumerate() {
        for (r, &res) in resolutions.iter().enumerate() {
            let trials = outcome.iter().map(|t| t[r][e].clone()).collect();
            cells.push(SweepCell::new(eta, res as f64, trials));
        }
    }
    Ok(SweepResult {
        kind: SweepKind::EtaResolution,
        cells,
        trial_seeds: seeds,
    })
}
