//! Python bindings for `skinloc`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use skinloc_core as core;
use skinloc_core::{CalibrationSample, ResponseCurve};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "PatchLayout", module = "skinloc", frozen)]
#[derive(Clone)]
struct PyLayout(core::PatchLayout);

#[pymethods]
impl PyLayout {
    #[new]
    fn new(width_mm: f64, height_mm: f64, transmit_x_mm: Vec<f64>, receive_y_mm: Vec<f64>) -> PyResult<Self> {
        core::PatchLayout::new(width_mm, height_mm, transmit_x_mm, receive_y_mm)
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn patch_a() -> Self {
        Self(core::make_patch_a())
    }

    #[staticmethod]
    fn patch_b() -> Self {
        Self(core::make_patch_b())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::io::layout_from_json(text).map(Self).map_err(value_err)
    }

    fn to_json(&self) -> String {
        core::io::layout_to_json(&self.0)
    }

    #[getter]
    fn width_mm(&self) -> f64 {
        self.0.width_mm()
    }

    #[getter]
    fn height_mm(&self) -> f64 {
        self.0.height_mm()
    }

    #[getter]
    fn sensor_count(&self) -> usize {
        self.0.sensor_count()
    }

    /// True sensor positions in mm, indexed by sensor id.
    fn sensors(&self) -> Vec<(f64, f64)> {
        self.0.sensors().positions_mm().iter().map(|p| (p.x, p.y)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "PatchLayout({} x {} mm, {} sensors)",
            self.0.width_mm(),
            self.0.height_mm(),
            self.0.sensor_count()
        )
    }
}

#[pyclass(name = "ResponseModel", module = "skinloc", frozen)]
#[derive(Clone, Copy)]
struct PyResponseModel(core::ResponseModel);

#[pymethods]
impl PyResponseModel {
    #[new]
    fn new(baseline: f64, amplitude: f64, half_distance_mm: f64, noise_sigma: f64) -> PyResult<Self> {
        core::ResponseModel::new(baseline, amplitude, half_distance_mm, noise_sigma)
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn calibrated_default() -> Self {
        Self(core::ResponseModel::calibrated_default())
    }

    fn with_noise_sigma(&self, noise_sigma: f64) -> Self {
        Self(self.0.with_noise_sigma(noise_sigma))
    }

    fn mean_response(&self, distance_mm: f64) -> f64 {
        self.0.mean_response(distance_mm)
    }

    #[getter]
    fn baseline(&self) -> f64 {
        self.0.baseline
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.0.amplitude
    }

    #[getter]
    fn half_distance_mm(&self) -> f64 {
        self.0.half_distance_mm
    }

    #[getter]
    fn noise_sigma(&self) -> f64 {
        self.0.noise_sigma
    }

    fn __repr__(&self) -> String {
        let m = self.0;
        format!(
            "ResponseModel(baseline={}, amplitude={}, half_distance_mm={}, noise_sigma={})",
            m.baseline, m.amplitude, m.half_distance_mm, m.noise_sigma
        )
    }
}

#[pyclass(name = "ProbePlan", module = "skinloc", frozen)]
#[derive(Clone)]
struct PyProbePlan(core::ProbePlan);

#[pymethods]
impl PyProbePlan {
    #[getter]
    fn rows(&self) -> usize {
        self.0.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.0.cols()
    }

    fn locations(&self) -> Vec<(f64, f64)> {
        self.0.locations_mm().iter().map(|p| (p.x, p.y)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "PointLog", module = "skinloc", frozen)]
#[derive(Clone)]
struct PyPointLog(core::PointLog);

#[pymethods]
impl PyPointLog {
    #[new]
    #[pyo3(signature = (probe_mm, readings, n_samples = 1))]
    fn new(probe_mm: (f64, f64), readings: Vec<f64>, n_samples: usize) -> Self {
        Self(core::PointLog {
            probe_mm: core::Point2::new(probe_mm.0, probe_mm.1),
            readings,
            n_samples,
        })
    }

    #[getter]
    fn probe_mm(&self) -> (f64, f64) {
        (self.0.probe_mm.x, self.0.probe_mm.y)
    }

    #[getter]
    fn readings(&self) -> Vec<f64> {
        self.0.readings.clone()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.0.n_samples
    }
}

#[pyclass(name = "Prediction", module = "skinloc", frozen)]
#[derive(Clone, Copy)]
struct PyPrediction(core::Prediction);

#[pymethods]
impl PyPrediction {
    #[getter]
    fn sensor_id(&self) -> usize {
        self.0.sensor_id
    }

    #[getter]
    fn position_mm(&self) -> (f64, f64) {
        (self.0.position_mm.x, self.0.position_mm.y)
    }

    #[getter]
    fn support_count(&self) -> usize {
        self.0.support_count
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta
    }

    fn __repr__(&self) -> String {
        let p = self.0.position_mm;
        format!("Prediction(sensor_id={}, position_mm=({}, {}))", self.0.sensor_id, p.x, p.y)
    }
}

fn unwrap_logs(logs: &[PyRef<'_, PyPointLog>]) -> Vec<core::PointLog> {
    logs.iter().map(|l| l.0.clone()).collect()
}

#[pyfunction]
fn uniform_probe_plan(layout: &PyLayout, rows: usize, cols: usize) -> PyResult<PyProbePlan> {
    core::uniform_probe_plan(&layout.0, rows, cols)
        .map(PyProbePlan)
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (layout, model, plan, n_samples = 50, jitter_mm = 2.0, seed = 0))]
fn simulate_acquisition(
    py: Python<'_>,
    layout: &PyLayout,
    model: &PyResponseModel,
    plan: &PyProbePlan,
    n_samples: usize,
    jitter_mm: f64,
    seed: u64,
) -> PyResult<Vec<PyPointLog>> {
    let logs = py
        .allow_threads(|| core::simulate_acquisition(&layout.0, &model.0, &plan.0, n_samples, jitter_mm, seed))
        .map_err(value_err)?;
    Ok(logs.into_iter().map(PyPointLog).collect())
}

/// One entry per sensor: a `Prediction`, or `None` when nothing survived
/// the threshold.
#[pyfunction]
#[pyo3(signature = (logs, plan, layout, eta = 0.65, pixels_per_cm = 128))]
fn localize_all(
    py: Python<'_>,
    logs: Vec<PyRef<'_, PyPointLog>>,
    plan: &PyProbePlan,
    layout: &PyLayout,
    eta: f64,
    pixels_per_cm: u32,
) -> PyResult<Vec<Option<PyPrediction>>> {
    let logs = unwrap_logs(&logs);
    let preds = py
        .allow_threads(|| core::localize_all(&logs, &plan.0, &layout.0, eta, pixels_per_cm))
        .map_err(value_err)?;
    Ok(preds.into_iter().map(|p| p.ok().map(PyPrediction)).collect())
}

/// Returns `(per_sensor_db, mean_db)`; undefined entries are `None`.
#[pyfunction]
fn compute_snr(
    baseline_samples: Vec<Vec<f64>>,
    logs: Vec<PyRef<'_, PyPointLog>>,
) -> PyResult<(Vec<Option<f64>>, Option<f64>)> {
    let report = core::compute_snr(&baseline_samples, &unwrap_logs(&logs)).map_err(value_err)?;
    Ok((report.per_sensor_db.into_iter().map(Result::ok).collect(), report.mean_db))
}

/// Returns `(per_sensor_error_mm, mean_error_mm, sigma_pe_mm, rms_error_mm)`.
#[pyfunction]
fn error_stats(
    predictions: Vec<PyRef<'_, PyPrediction>>,
    layout: &PyLayout,
) -> PyResult<(Vec<f64>, f64, f64, f64)> {
    let preds: Vec<core::Prediction> = predictions.iter().map(|p| p.0).collect();
    let s = core::error_stats(&preds, &layout.0.sensors()).map_err(value_err)?;
    Ok((s.per_sensor_error_mm, s.mean_error_mm, s.sigma_pe_mm, s.rms_error_mm))
}

#[pyfunction]
#[pyo3(signature = (distances_mm, readings, initial = None))]
fn fit_response_model(
    distances_mm: Vec<f64>,
    readings: Vec<f64>,
    initial: Option<PyResponseModel>,
) -> PyResult<PyResponseModel> {
    if distances_mm.len() != readings.len() {
        return Err(PyValueError::new_err("distances_mm and readings differ in length"));
    }
    let samples: Vec<CalibrationSample> = distances_mm
        .into_iter()
        .zip(readings)
        .map(|(distance_mm, reading)| CalibrationSample { distance_mm, reading })
        .collect();
    let start = initial.map_or_else(core::ResponseModel::calibrated_default, |m| m.0);
    core::fit_response_model(&samples, &start)
        .map(PyResponseModel)
        .map_err(value_err)
}

#[pymodule]
fn skinloc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLayout>()?;
    m.add_class::<PyResponseModel>()?;
    m.add_class::<PyProbePlan>()?;
    m.add_class::<PyPointLog>()?;
    m.add_class::<PyPrediction>()?;
    m.add_function(wrap_pyfunction!(uniform_probe_plan, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_acquisition, m)?)?;
    m.add_function(wrap_pyfunction!(localize_all, m)?)?;
    m.add_function(wrap_pyfunction!(compute_snr, m)?)?;
    m.add_function(wrap_pyfunction!(error_stats, m)?)?;
    m.add_function(wrap_pyfunction!(fit_response_model, m)?)?;
    m.add("DEFAULT_ETA", core::DEFAULT_ETA)?;
    m.add("DEFAULT_PIXELS_PER_CM", core::DEFAULT_PIXELS_PER_CM)?;
    Ok(())
}
