//! Sensor localization from point logs.
//!
//! Each sensor is located independently in three steps:
//!
//! 1. its readings are arranged by probe position into a [`PointLogMap`];
//! 2. the map is upscaled with a not-a-knot bicubic spline onto a regular
//!    pixel grid covering the probe nodes ([`InterpolatedMap`]);
//! 3. pixels brighter than `eta * max` are kept and the unweighted mean of
//!    their centers is the predicted sensor position ([`localize_sensor`]).

use rayon::prelude::*;
use thiserror::Error;

use crate::layout::{PatchLayout, Point2, ProbePlan, POSITION_TOLERANCE_MM};
use crate::sim::PointLog;
use crate::spline::{basis_weights, BicubicSpline, SplineError};

pub const DEFAULT_ETA: f64 = 0.65;
pub const DEFAULT_PIXELS_PER_CM: u32 = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalizationError {
    #[error("no point log at grid cell (row {row}, col {col}) = ({x}, {y}) mm")]
    MissingCell { row: usize, col: usize, x: f64, y: f64 },
    #[error("more than one point log at grid cell (row {row}, col {col}) = ({x}, {y}) mm")]
    DuplicateCell { row: usize, col: usize, x: f64, y: f64 },
    #[error("point log at ({x}, {y}) mm does not match any grid cell")]
    OffGrid { x: f64, y: f64 },
    #[error("sensor {sensor_id} is out of range for logs with {sensors} readings")]
    UnknownSensor { sensor_id: usize, sensors: usize },
    #[error("point logs disagree on the number of sensors ({expected} vs {found})")]
    SensorCountMismatch { expected: usize, found: usize },
    #[error("map needs at least 2 x 2 cells, got {rows} x {cols}")]
    MapTooSmall { rows: usize, cols: usize },
    #[error("pixels per cm must be >= 1")]
    Resolution,
    #[error("eta must lie in (0, 1], got {0}")]
    Eta(f64),
    #[error("sensor {sensor_id}: interpolated map is empty")]
    EmptyMap { sensor_id: usize },
    #[error("sensor {sensor_id}: map is flat (max = min = {value}); threshold is ambiguous")]
    FlatMap { sensor_id: usize, value: f64 },
    #[error("sensor {sensor_id}: no pixel exceeds eta * max = {threshold}")]
    EmptySelection { sensor_id: usize, threshold: f64 },
    #[error("sensor {sensor_id}: map contains non-finite values")]
    NonFinite { sensor_id: usize },
    #[error("probe positions do not form a grid: {0}")]
    IrregularGrid(String),
    #[error("no point logs supplied")]
    NoLogs,
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// One sensor's readings arranged on the probe grid: `values[r][c]` is the
/// reading taken with the probe at `plan.location(r, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointLogMap {
    pub sensor_id: usize,
    pub x_nodes: Vec<f64>,
    pub y_nodes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PointLogMap {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point2 {
        Point2::new(self.x_nodes[col], self.y_nodes[row])
    }
}

/// Places every plan cell's log index, keyed on probe position.
fn index_logs(logs: &[PointLog], plan: &ProbePlan) -> Result<Vec<usize>, LocalizationError> {
    let cols = plan.cols();
    let mut slot = vec![usize::MAX; plan.len()];
    for (i, log) in logs.iter().enumerate() {
        let (r, c) = plan.cell_of(log.probe_mm).ok_or(LocalizationError::OffGrid {
            x: log.probe_mm.x,
            y: log.probe_mm.y,
        })?;
        let cell = &mut slot[r * cols + c];
        if *cell != usize::MAX {
            let p = plan.location(r, c);
            return Err(LocalizationError::DuplicateCell { row: r, col: c, x: p.x, y: p.y });
        }
        *cell = i;
    }
    if let Some(k) = slot.iter().position(|&s| s == usize::MAX) {
        let (row, col) = (k / cols, k % cols);
        let p = plan.location(row, col);
        return Err(LocalizationError::MissingCell { row, col, x: p.x, y: p.y });
    }
    Ok(slot)
}

fn sensor_count(logs: &[PointLog]) -> Result<usize, LocalizationError> {
    let n = logs.first().ok_or(LocalizationError::NoLogs)?.readings.len();
    match logs.iter().find(|l| l.readings.len() != n) {
        Some(l) => Err(LocalizationError::SensorCountMismatch {
            expected: n,
            found: l.readings.len(),
        }),
        None => Ok(n),
    }
}

pub fn build_point_log_map(
    logs: &[PointLog],
    plan: &ProbePlan,
    sensor_id: usize,
) -> Result<PointLogMap, LocalizationError> {
    let sensors = sensor_count(logs)?;
    if sensor_id >= sensors {
        return Err(LocalizationError::UnknownSensor { sensor_id, sensors });
    }
    let slot = index_logs(logs, plan)?;
    Ok(map_from_slots(logs, plan, &slot, sensor_id))
}

fn map_from_slots(logs: &[PointLog], plan: &ProbePlan, slot: &[usize], sensor_id: usize) -> PointLogMap {
    let values = slot
        .chunks(plan.cols())
        .map(|row| row.iter().map(|&i| logs[i].readings[sensor_id]).collect())
        .collect();
    PointLogMap {
        sensor_id,
        x_nodes: plan.x_nodes().to_vec(),
        y_nodes: plan.y_nodes().to_vec(),
        values,
    }
}

/// Point-log map upscaled onto a regular pixel grid.
///
/// Pixel `(i, j)` (column `i`, row `j`) is centered at
/// `origin_mm + (i, j) * pixel_pitch_mm`; the grid spans the probe-node
/// bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedMap {
    pub sensor_id: usize,
    pub pixel_pitch_mm: f64,
    pub origin_mm: Point2,
    pub width: usize,
    pub height: usize,
    /// Row-major, `values[j * width + i]`.
    pub values: Vec<f64>,
    /// Probe-node bounding box `(min, max)`.
    pub hull_mm: (Point2, Point2),
}

impl InterpolatedMap {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin_mm.x + i as f64 * self.pixel_pitch_mm,
            self.origin_mm.y + j as f64 * self.pixel_pitch_mm,
        )
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.width)
    }
}

/// Pixel pitch in millimeters for a linear density in pixels per centimeter.
pub fn pixel_pitch_mm(pixels_per_cm: u32) -> f64 {
    10.0 / pixels_per_cm as f64
}

fn pixel_axis(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    let n = ((hi - lo) / pitch + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * pitch).collect()
}

/// Precomputed spline weights for one probe grid and pixel density, shared by
/// every sensor on that grid.
#[derive(Debug, Clone)]
pub struct Interpolator {
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    pitch: f64,
    px_x: usize,
    px_y: usize,
    wx: Vec<Vec<f64>>,
    wy: Vec<Vec<f64>>,
}

impl Interpolator {
    pub fn new(x_nodes: &[f64], y_nodes: &[f64], pixels_per_cm: u32) -> Result<Self, LocalizationError> {
        if x_nodes.len() < 2 || y_nodes.len() < 2 {
            return Err(LocalizationError::MapTooSmall {
                rows: y_nodes.len(),
                cols: x_nodes.len(),
            });
        }
        if pixels_per_cm == 0 {
            return Err(LocalizationError::Resolution);
        }
        let pitch = pixel_pitch_mm(pixels_per_cm);
        let xs = pixel_axis(x_nodes[0], x_nodes[x_nodes.len() - 1], pitch);
        let ys = pixel_axis(y_nodes[0], y_nodes[y_nodes.len() - 1], pitch);
        Ok(Self {
            x_nodes: x_nodes.to_vec(),
            y_nodes: y_nodes.to_vec(),
            pitch,
            px_x: xs.len(),
            px_y: ys.len(),
            wx: basis_weights(x_nodes, &xs)?,
            wy: basis_weights(y_nodes, &ys)?,
        })
    }

    pub fn for_plan(plan: &ProbePlan, pixels_per_cm: u32) -> Result<Self, LocalizationError> {
        Self::new(plan.x_nodes(), plan.y_nodes(), pixels_per_cm)
    }

    pub fn apply(&self, map: &PointLogMap) -> Result<InterpolatedMap, LocalizationError> {
        if map.x_nodes != self.x_nodes || map.y_nodes != self.y_nodes {
            return Err(LocalizationError::IrregularGrid(
                "map nodes differ from the interpolator's grid".into(),
            ));
        }
        // along x for every node row, then along y for every pixel column
        let along_x: Vec<Vec<f64>> = map
            .values
            .iter()
            .map(|row| {
                self.wx
                    .iter()
                    .map(|w| w.iter().zip(row).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        let mut values = vec![0.0; self.px_x * self.px_y];
        for (out, wy) in values.chunks_mut(self.px_x).zip(&self.wy) {
            for (w, row) in wy.iter().zip(&along_x) {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += w * a;
                }
            }
        }
        let n = self.x_nodes.len();
        let m = self.y_nodes.len();
        Ok(InterpolatedMap {
            sensor_id: map.sensor_id,
            pixel_pitch_mm: self.pitch,
            origin_mm: Point2::new(self.x_nodes[0], self.y_nodes[0]),
            width: self.px_x,
            height: self.px_y,
            values,
            hull_mm: (
                Point2::new(self.x_nodes[0], self.y_nodes[0]),
                Point2::new(self.x_nodes[n - 1], self.y_nodes[m - 1]),
            ),
        })
    }
}

/// Continuous spline surface through a point-log map.
pub fn spline_surface(map: &PointLogMap) -> Result<BicubicSpline, LocalizationError> {
    if map.rows() < 2 || map.cols() < 2 {
        return Err(LocalizationError::MapTooSmall {
            rows: map.rows(),
            cols: map.cols(),
        });
    }
    Ok(BicubicSpline::not_a_knot(&map.x_nodes, &map.y_nodes, &map.values)?)
}

/// Upscales `map` to `pixels_per_cm` pixels per linear centimeter.
pub fn interpolate(map: &PointLogMap, pixels_per_cm: u32) -> Result<InterpolatedMap, LocalizationError> {
    Interpolator::new(&map.x_nodes, &map.y_nodes, pixels_per_cm)?.apply(map)
}

/// Predicted sensor position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub sensor_id: usize,
    pub position_mm: Point2,
    /// Number of pixels above the threshold.
    pub support_count: usize,
    pub eta: f64,
    /// The prediction lies within half a pixel of the probe-node hull, so the
    /// sensor may sit outside the probed area.
    pub near_hull_edge: bool,
}

/// Thresholded centroid: mean center of all pixels with value `> eta * max`.
pub fn localize_sensor(interp: &InterpolatedMap, eta: f64) -> Result<Prediction, LocalizationError> {
    localize_thresholds(interp, &[eta]).remove(0)
}

/// [`localize_sensor`] at several thresholds, sharing one pass over the
/// pixels.
pub fn localize_thresholds(
    interp: &InterpolatedMap,
    etas: &[f64],
) -> Vec<Result<Prediction, LocalizationError>> {
    let sensor_id = interp.sensor_id;
    let fail = |e: LocalizationError| vec![Err(e); etas.len()];
    if let Some(&bad) = etas.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return fail(LocalizationError::Eta(bad));
    }
    if interp.values.is_empty() {
        return fail(LocalizationError::EmptyMap { sensor_id });
    }
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for &v in &interp.values {
        if !v.is_finite() {
            return fail(LocalizationError::NonFinite { sensor_id });
        }
        max = max.max(v);
        min = min.min(v);
    }
    if max == min {
        return fail(LocalizationError::FlatMap { sensor_id, value: max });
    }
    let thresholds: Vec<f64> = etas.iter().map(|&eta| eta * max).collect();
    let lowest = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    // (count, sum of column indices, sum of row indices) per threshold
    let mut acc = vec![(0usize, 0u64, 0u64); etas.len()];
    for (j, row) in interp.rows().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            if v <= lowest {
                continue;
            }
            for (a, &t) in acc.iter_mut().zip(&thresholds) {
                if v > t {
                    a.0 += 1;
                    a.1 += i as u64;
                    a.2 += j as u64;
                }
            }
        }
    }
    let pitch = interp.pixel_pitch_mm;
    let (lo, hi) = interp.hull_mm;
    let margin = pitch / 2.0;
    etas.iter()
        .zip(&thresholds)
        .zip(acc)
        .map(|((&eta, &threshold), (count, sum_i, sum_j))| {
            if count == 0 {
                return Err(LocalizationError::EmptySelection { sensor_id, threshold });
            }
            let position_mm = Point2::new(
                interp.origin_mm.x + pitch * (sum_i as f64 / count as f64),
                interp.origin_mm.y + pitch * (sum_j as f64 / count as f64),
            );
            let near_hull_edge = position_mm.x - lo.x < margin
                || hi.x - position_mm.x < margin
                || position_mm.y - lo.y < margin
                || hi.y - position_mm.y < margin;
            Ok(Prediction {
                sensor_id,
                position_mm,
                support_count: count,
                eta,
                near_hull_edge,
            })
        })
        .collect()
}

/// Pixels `(i, j)` kept by the filter at `eta`, in row-major order.
pub fn selected_pixels(interp: &InterpolatedMap, eta: f64) -> Result<Vec<(usize, usize)>, LocalizationError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(LocalizationError::Eta(eta));
    }
    let max = interp.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = eta * max;
    Ok(interp
        .rows()
        .enumerate()
        .flat_map(|(j, row)| {
            row.iter()
                .enumerate()
                .filter(move |&(_, &v)| v > threshold)
                .map(move |(i, _)| (i, j))
        })
        .collect())
}

/// Runs the full pipeline for every sensor, in sensor-id order.
///
/// Structural problems with the logs abort the call; per-sensor failures
/// (flat or empty maps) are reported in place without stopping the others.
pub fn localize_all(
    logs: &[PointLog],
    plan: &ProbePlan,
    layout: &PatchLayout,
    eta: f64,
    pixels_per_cm: u32,
) -> Result<Vec<Result<Prediction, LocalizationError>>, LocalizationError> {
    let sensors = sensor_count(logs)?;
    if sensors != layout.sensor_count() {
        return Err(LocalizationError::SensorCountMismatch {
            expected: layout.sensor_count(),
            found: sensors,
        });
    }
    localize_logs(logs, plan, eta, pixels_per_cm)
}

/// As [`localize_all`], for logs whose layout is unknown.
pub fn localize_logs(
    logs: &[PointLog],
    plan: &ProbePlan,
    eta: f64,
    pixels_per_cm: u32,
) -> Result<Vec<Result<Prediction, LocalizationError>>, LocalizationError> {
    let maps = point_log_maps(logs, plan)?;
    let interpolator = Interpolator::for_plan(plan, pixels_per_cm)?;
    localize_maps(&maps, &interpolator, &[eta]).map(|mut v| v.remove(0))
}

/// Point-log maps for every sensor.
pub fn point_log_maps(logs: &[PointLog], plan: &ProbePlan) -> Result<Vec<PointLogMap>, LocalizationError> {
    let sensors = sensor_count(logs)?;
    let slot = index_logs(logs, plan)?;
    Ok((0..sensors).map(|s| map_from_slots(logs, plan, &slot, s)).collect())
}

/// Interpolates each map once and localizes it at every threshold in `etas`.
/// The result is indexed `[eta][sensor]`.
pub fn localize_maps(
    maps: &[PointLogMap],
    interpolator: &Interpolator,
    etas: &[f64],
) -> Result<Vec<Vec<Result<Prediction, LocalizationError>>>, LocalizationError> {
    if let Some(&bad) = etas.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(LocalizationError::Eta(bad));
    }
    let per_sensor: Vec<Vec<Result<Prediction, LocalizationError>>> = maps
        .par_iter()
        .map(|map| match interpolator.apply(map) {
            Ok(interp) => localize_thresholds(&interp, etas),
            Err(e) => vec![Err(e); etas.len()],
        })
        .collect();
    Ok((0..etas.len())
        .map(|k| per_sensor.iter().map(|v| v[k].clone()).collect())
        .collect())
}

/// Recovers the probe grid from log positions.
///
/// Coordinates within [`POSITION_TOLERANCE_MM`] are merged into one grid
/// line; every combination of grid lines must then hold exactly one log.
pub fn infer_plan(logs: &[PointLog]) -> Result<ProbePlan, LocalizationError> {
    if logs.is_empty() {
        return Err(LocalizationError::NoLogs);
    }
    let xs = cluster(logs.iter().map(|l| l.probe_mm.x));
    let ys = cluster(logs.iter().map(|l| l.probe_mm.y));
    if xs.len() < 2 || ys.len() < 2 {
        return Err(LocalizationError::MapTooSmall {
            rows: ys.len(),
            cols: xs.len(),
        });
    }
    if xs.len() * ys.len() > logs.len() * 2 {
        return Err(LocalizationError::IrregularGrid(format!(
            "{} logs spread over {} x {} distinct coordinates",
            logs.len(),
            ys.len(),
            xs.len()
        )));
    }
    let plan = ProbePlan::rectilinear(xs, ys)
        .map_err(|e| LocalizationError::IrregularGrid(e.to_string()))?;
    index_logs(logs, &plan)?;
    Ok(plan)
}

fn cluster(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    let mut group_start = f64::NAN;
    for x in v {
        if out.is_empty() || x - group_start > POSITION_TOLERANCE_MM {
            out.push(x);
            group_start = x;
        }
    }
    out
}
