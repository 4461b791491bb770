//! Localization of concealed sensors in variable-density mutual-capacitance
//! tactile arrays.
//!
//! A probe touches the patch at known grid positions and every sensor's
//! reading is logged. For each sensor, the readings form a heat map over the
//! probe grid that peaks near the sensor; the map is upscaled with a bicubic
//! spline, thresholded at a fraction of its maximum, and the centroid of the
//! surviving pixels is the predicted sensor position.
//!
//! Modules:
//! - [`layout`]: patch geometry, ground-truth sensor sets, probe plans
//! - [`response`], [`fit`]: distance-to-reading curves and their calibration
//! - [`sim`]: seeded acquisition simulator
//! - [`spline`], [`localize`]: interpolation and the localization pipeline
//! - [`metrics`], [`sweep`]: SNR, error statistics and parameter sweeps
//! - [`io`]: JSON and CSV file formats

pub mod fit;
pub mod io;
pub mod layout;
pub mod localize;
pub mod metrics;
pub mod response;
pub mod sim;
pub mod spline;
pub mod sweep;

pub use fit::{fit_response_model, FitError};
pub use layout::{
    make_patch_a, make_patch_b, make_patch_b_with, uniform_probe_plan, LayoutError, PatchLayout,
    Point2, ProbePlan, SensorSet,
};
pub use localize::{
    build_point_log_map, infer_plan, interpolate, localize_all, localize_sensor, selected_pixels,
    InterpolatedMap,
    LocalizationError, PointLogMap, Prediction, DEFAULT_ETA, DEFAULT_PIXELS_PER_CM,
};
pub use metrics::{compute_snr, error_stats, ErrorStats, MetricsError, SnrReport};
pub use response::{CalibrationSample, ExponentialResponse, ResponseCurve, ResponseModel};
pub use sim::{acquire_baseline, acquire_point_log, derive_seed, simulate_acquisition, PointLog, SimError};
pub use sweep::{
    run_pipeline, sweep_eta_resolution, sweep_point_log_count, PipelineError, SweepCell, SweepKind,
    SweepResult, TrialSettings,
};
