//! File formats: layout JSON and the CSV interchange files.
//!
//! Floats are written in Rust's shortest round-trip form so that reading a
//! file back and writing it again reproduces it byte for byte.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{LayoutError, PatchLayout, Point2};
use crate::localize::{InterpolatedMap, Prediction};
use crate::metrics::{ErrorStats, SnrReport};
use crate::response::{CalibrationSample, ResponseModel};
use crate::sim::PointLog;
use crate::sweep::SweepResult;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("unexpected CSV header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

/// Layout file contents; every coordinate is in centimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    pub width_cm: f64,
    pub height_cm: f64,
    pub transmit_x_cm: Vec<f64>,
    pub receive_y_cm: Vec<f64>,
}

/// Moves the decimal point of `x`'s shortest representation by `places`.
fn shift_decimal(x: f64, places: i32) -> f64 {
    let sci = format!("{x:e}");
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp output has an exponent");
    let exp: i32 = exp.parse().expect("LowerExp exponent is an integer");
    format!("{mantissa}e{}", exp + places)
        .parse()
        .expect("shifted literal parses")
}

fn cm_to_mm(cm: f64) -> f64 {
    shift_decimal(cm, 1)
}

/// Shortest centimeter value near `mm / 10` that converts back to exactly
/// `mm`.
fn exact_cm(mm: f64) -> Option<f64> {
    let c = shift_decimal(mm, -1);
    let mut candidates = vec![c];
    let (mut down, mut up) = (c, c);
    for _ in 0..16 {
        down = down.next_down();
        up = up.next_up();
        candidates.extend([down, up]);
    }
    candidates
        .into_iter()
        .filter(|&x| cm_to_mm(x) == mm)
        .min_by_key(|x| x.to_string().len())
}

/// Centimeter value for `mm`. When no value converts back to `mm` exactly,
/// the result is the one for the nearest millimeter value that does, so a
/// written layout is reproduced unchanged by a read and a second write.
fn mm_to_cm(mm: f64) -> f64 {
    exact_cm(mm).unwrap_or_else(|| {
        let c = shift_decimal(mm, -1);
        exact_cm(cm_to_mm(c)).unwrap_or(c)
    })
}

impl LayoutFile {
    pub fn from_layout(layout: &PatchLayout) -> Self {
        let cm = |v: &[f64]| v.iter().map(|&x| mm_to_cm(x)).collect();
        Self {
            width_cm: mm_to_cm(layout.width_mm()),
            height_cm: mm_to_cm(layout.height_mm()),
            transmit_x_cm: cm(layout.transmit_x_mm()),
            receive_y_cm: cm(layout.receive_y_mm()),
        }
    }

    pub fn to_layout(&self) -> Result<PatchLayout, LayoutError> {
        let mm = |v: &[f64]| v.iter().map(|&x| cm_to_mm(x)).collect();
        PatchLayout::new(
            cm_to_mm(self.width_cm),
            cm_to_mm(self.height_cm),
            mm(&self.transmit_x_cm),
            mm(&self.receive_y_cm),
        )
    }
}

pub fn layout_to_json(layout: &PatchLayout) -> String {
    let mut s = serde_json::to_string_pretty(&LayoutFile::from_layout(layout)).expect("plain data");
    s.push('\n');
    s
}

pub fn layout_from_json(text: &str) -> Result<PatchLayout, IoError> {
    let file: LayoutFile = serde_json::from_str(text)?;
    Ok(file.to_layout()?)
}

pub fn read_layout(path: &Path) -> Result<PatchLayout, IoError> {
    layout_from_json(&read_to_string(path)?)
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|source| IoError::File {
            path: path.display().to_string(),
            source,
        })?;
    Ok(s)
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let wrap = |source: std::io::Error| IoError::File {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii output")
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), IoError> {
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != expected {
        return Err(IoError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn field(rec: &csv::StringRecord, i: usize) -> Result<f64, IoError> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).ok_or_else(|| IoError::Row {
        line,
        message: format!("missing column {i}"),
    })?;
    raw.parse().map_err(|_| IoError::Row {
        line,
        message: format!("`{raw}` is not a number"),
    })
}

fn int_field(rec: &csv::StringRecord, i: usize) -> Result<usize, IoError> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| IoError::Row {
        line,
        message: format!("`{raw}` is not a non-negative integer"),
    })
}

pub const CALIBRATION_HEADER: [&str; 2] = ["distance_mm", "reading"];

pub fn calibration_to_csv(samples: &[CalibrationSample]) -> String {
    let mut w = writer();
    w.write_record(CALIBRATION_HEADER).expect("in-memory");
    for s in samples {
        w.write_record([num(s.distance_mm), num(s.reading)]).expect("in-memory");
    }
    finish(w)
}

pub fn calibration_from_csv(text: &str) -> Result<Vec<CalibrationSample>, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &CALIBRATION_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(CalibrationSample {
                distance_mm: field(&rec, 0)?,
                reading: field(&rec, 1)?,
            })
        })
        .collect()
}

fn sensor_columns(prefix: &[&str], n: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..n).map(|i| format!("s{i}")))
        .collect()
}

/// `probe_x_mm,probe_y_mm,s0,...`; one row per point log.
pub fn point_logs_to_csv(logs: &[PointLog]) -> String {
    let n = logs.first().map_or(0, |l| l.readings.len());
    let mut w = writer();
    w.write_record(sensor_columns(&["probe_x_mm", "probe_y_mm"], n)).expect("in-memory");
    for l in logs {
        let row = [l.probe_mm.x, l.probe_mm.y]
            .into_iter()
            .chain(l.readings.iter().copied())
            .map(num);
        w.write_record(row).expect("in-memory");
    }
    finish(w)
}

/// Parses point logs. The per-log sample count is not stored in the file and
/// is set to `n_samples`.
pub fn point_logs_from_csv(text: &str, n_samples: usize) -> Result<Vec<PointLog>, IoError> {
    let mut rdr = reader(text);
    let headers = rdr.headers()?.clone();
    let n = headers.len().saturating_sub(2);
    let expected = sensor_columns(&["probe_x_mm", "probe_y_mm"], n);
    if n == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(IoError::Header {
            expected: "probe_x_mm,probe_y_mm,s0,...,s{N-1}".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let readings = (2..n + 2).map(|i| field(&rec, i)).collect::<Result<_, _>>()?;
            Ok(PointLog {
                probe_mm: Point2::new(field(&rec, 0)?, field(&rec, 1)?),
                readings,
                n_samples,
            })
        })
        .collect()
}

/// Raw no-contact samples: header `s0,...,s{N-1}`, one row per sample.
pub fn baseline_to_csv(per_sensor: &[Vec<f64>]) -> String {
    let rows = per_sensor.first().map_or(0, Vec::len);
    let mut w = writer();
    w.write_record(sensor_columns(&[], per_sensor.len())).expect("in-memory");
    for r in 0..rows {
        w.write_record(per_sensor.iter().map(|s| num(s[r]))).expect("in-memory");
    }
    finish(w)
}

pub fn baseline_from_csv(text: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let mut rdr = reader(text);
    let headers = rdr.headers()?.clone();
    let n = headers.len();
    let expected = sensor_columns(&[], n);
    if n == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(IoError::Header {
            expected: "s0,...,s{N-1}".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut per_sensor = vec![Vec::new(); n];
    for rec in rdr.records() {
        let rec = rec?;
        for (i, column) in per_sensor.iter_mut().enumerate() {
            column.push(field(&rec, i)?);
        }
    }
    Ok(per_sensor)
}

pub const PREDICTION_HEADER: [&str; 5] = ["sensor_id", "pred_x_mm", "pred_y_mm", "support_count", "eta"];

pub fn predictions_to_csv(predictions: &[Prediction]) -> String {
    let mut w = writer();
    w.write_record(PREDICTION_HEADER).expect("in-memory");
    for p in predictions {
        w.write_record([
            p.sensor_id.to_string(),
            num(p.position_mm.x),
            num(p.position_mm.y),
            p.support_count.to_string(),
            num(p.eta),
        ])
        .expect("in-memory");
    }
    finish(w)
}

/// Parses a predictions file; the hull-edge flag is not stored and reads back
/// as `false`.
pub fn predictions_from_csv(text: &str) -> Result<Vec<Prediction>, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &PREDICTION_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(Prediction {
                sensor_id: int_field(&rec, 0)?,
                position_mm: Point2::new(field(&rec, 1)?, field(&rec, 2)?),
                support_count: int_field(&rec, 3)?,
                eta: field(&rec, 4)?,
                near_hull_edge: false,
            })
        })
        .collect()
}

pub const SNR_HEADER: [&str; 2] = ["sensor_id", "snr_db"];

/// Undefined SNR values are written as `NaN`.
pub fn snr_to_csv(report: &SnrReport) -> String {
    let mut w = writer();
    w.write_record(SNR_HEADER).expect("in-memory");
    for (i, v) in report.per_sensor_db.iter().enumerate() {
        w.write_record([i.to_string(), num(v.unwrap_or(f64::NAN))]).expect("in-memory");
    }
    finish(w)
}

/// `(sensor_id, snr_db)` rows; `NaN` marks an undefined SNR.
pub fn snr_from_csv(text: &str) -> Result<Vec<(usize, f64)>, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &SNR_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok((int_field(&rec, 0)?, field(&rec, 1)?))
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 4] = ["param1", "param2", "trial", "sigma_pe_mm"];

/// Long format, one row per (cell, trial); failed trials are `NaN`.
pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut w = writer();
    w.write_record(SWEEP_HEADER).expect("in-memory");
    for cell in &result.cells {
        for (t, v) in cell.trials.iter().enumerate() {
            let v = v.as_ref().copied().unwrap_or(f64::NAN);
            w.write_record([num(cell.param1), num(cell.param2), t.to_string(), num(v)])
                .expect("in-memory");
        }
    }
    finish(w)
}

/// `(param1, param2, trial, sigma_pe_mm)` rows.
pub fn sweep_from_csv(text: &str) -> Result<Vec<(f64, f64, usize, f64)>, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &SWEEP_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok((field(&rec, 0)?, field(&rec, 1)?, int_field(&rec, 2)?, field(&rec, 3)?))
        })
        .collect()
}

pub const MODEL_HEADER: [&str; 4] = ["baseline", "amplitude", "half_distance_mm", "noise_sigma"];

pub fn model_to_csv(m: &ResponseModel) -> String {
    let mut w = writer();
    w.write_record(MODEL_HEADER).expect("in-memory");
    w.write_record([m.baseline, m.amplitude, m.half_distance_mm, m.noise_sigma].map(num))
        .expect("in-memory");
    finish(w)
}

pub fn model_from_csv(text: &str) -> Result<ResponseModel, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &MODEL_HEADER)?;
    let rec = rdr.records().next().ok_or(IoError::Row {
        line: 2,
        message: "missing parameter row".into(),
    })??;
    Ok(ResponseModel {
        baseline: field(&rec, 0)?,
        amplitude: field(&rec, 1)?,
        half_distance_mm: field(&rec, 2)?,
        noise_sigma: field(&rec, 3)?,
    })
}

pub const ERRORS_HEADER: [&str; 6] = ["sensor_id", "true_x_mm", "true_y_mm", "pred_x_mm", "pred_y_mm", "error_mm"];

/// Per-sensor error table for predictions checked against known positions.
pub fn errors_to_csv(predictions: &[Prediction], truth: &[Point2], stats: &ErrorStats) -> String {
    let mut w = writer();
    w.write_record(ERRORS_HEADER).expect("in-memory");
    for p in predictions {
        let t = truth[p.sensor_id];
        w.write_record([
            p.sensor_id.to_string(),
            num(t.x),
            num(t.y),
            num(p.position_mm.x),
            num(p.position_mm.y),
            num(stats.per_sensor_error_mm[p.sensor_id]),
        ])
        .expect("in-memory");
    }
    finish(w)
}

/// Interpolated map as a bare numeric matrix, one line per pixel row
/// (increasing `y`).
pub fn interpolated_map_to_csv(map: &InterpolatedMap) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in map.rows() {
        w.write_record(row.iter().map(|v| num(*v))).expect("in-memory");
    }
    finish(w)
}
