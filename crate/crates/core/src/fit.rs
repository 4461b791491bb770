//! Least-squares calibration of [`ResponseModel`] from `(distance, reading)`
//! samples.
//!
//! Baseline and amplitude enter the model linearly, so for a fixed half
//! distance they have a closed-form solution. The fit scans the profiled
//! cost over a log-spaced range of half distances, refines the best bracket
//! with a golden-section search, then polishes all three parameters jointly
//! with Levenberg-Marquardt.

use thiserror::Error;

use crate::response::{CalibrationSample, ResponseError, ResponseModel};

const SCAN_POINTS: usize = 400;
const SCAN_DECADES_BELOW: f64 = 3.0;
const SCAN_DECADES_ABOVE: f64 = 3.0;
const GOLDEN_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;
const PARAM_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 4 calibration samples, got {0}")]
    TooFewSamples(usize),
    #[error("calibration sample {0} is not finite or has a negative distance")]
    BadSample(usize),
    #[error("all samples share one distance; the half distance is unidentifiable")]
    UnidentifiableHalfDistance,
    #[error("initial model is invalid: {0}")]
    Initial(#[from] ResponseError),
}

/// Returns the model minimizing the sum of squared residuals.
///
/// `initial` is kept when it already fits at least as well, and its half
/// distance is reused when the data carry no amplitude (the half distance is
/// then unidentifiable). `noise_sigma` of the result is the residual standard
/// deviation with three fitted degrees of freedom removed.
pub fn fit_response_model(
    samples: &[CalibrationSample],
    initial: &ResponseModel,
) -> Result<ResponseModel, FitError> {
    initial.validate()?;
    if samples.len() < 4 {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    for (i, s) in samples.iter().enumerate() {
        if !(s.distance_mm.is_finite() && s.distance_mm >= 0.0 && s.reading.is_finite()) {
            return Err(FitError::BadSample(i));
        }
    }
    let first = samples[0].distance_mm;
    let max_distance = samples.iter().map(|s| s.distance_mm).fold(0.0, f64::max);
    if samples.iter().all(|s| s.distance_mm == first) || max_distance <= 0.0 {
        return Err(FitError::UnidentifiableHalfDistance);
    }

    let problem = Problem { samples };
    let mut best = problem.profile_scan(max_distance);
    if best.amplitude == 0.0 {
        best.half_distance_mm = initial.half_distance_mm;
    } else {
        best = problem.polish(best);
    }
    if problem.cost(initial) < problem.cost(&best) {
        best = *initial;
    }
    let dof = (samples.len() - 3) as f64;
    best.noise_sigma = (problem.cost(&best) / dof).sqrt();
    Ok(best)
}

/// Sum of squared residuals of `model` against `samples`.
pub fn sum_squared_residuals(samples: &[CalibrationSample], model: &ResponseModel) -> f64 {
    Problem { samples }.cost(model)
}

struct Problem<'a> {
    samples: &'a [CalibrationSample],
}

impl Problem<'_> {
    fn cost(&self, m: &ResponseModel) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let r = s.reading - (m.baseline + m.amplitude * m.shape(s.distance_mm));
                r * r
            })
            .sum()
    }

    /// Optimal baseline and non-negative amplitude for a fixed half distance.
    fn linear_solve(&self, half_distance_mm: f64) -> ResponseModel {
        let n = self.samples.len() as f64;
        let mut m = ResponseModel {
            baseline: 0.0,
            amplitude: 0.0,
            half_distance_mm,
            noise_sigma: 0.0,
        };
        let g_mean = self.samples.iter().map(|s| m.shape(s.distance_mm)).sum::<f64>() / n;
        let y_mean = self.samples.iter().map(|s| s.reading).sum::<f64>() / n;
        let (mut sgg, mut sgy) = (0.0, 0.0);
        for s in self.samples {
            let dg = m.shape(s.distance_mm) - g_mean;
            sgg += dg * dg;
            sgy += dg * (s.reading - y_mean);
        }
        let amplitude = if sgg > 0.0 { (sgy / sgg).max(0.0) } else { 0.0 };
        m.amplitude = amplitude;
        m.baseline = y_mean - amplitude * g_mean;
        m
    }

    fn profiled_cost(&self, log_d0: f64) -> (f64, ResponseModel) {
        let m = self.linear_solve(log_d0.exp());
        (self.cost(&m), m)
    }

    fn profile_scan(&self, max_distance: f64) -> ResponseModel {
        let lo = (max_distance.ln()) - SCAN_DECADES_BELOW * std::f64::consts::LN_10;
        let hi = (max_distance.ln()) + SCAN_DECADES_ABOVE * std::f64::consts::LN_10;
        let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
        let costs: Vec<(f64, ResponseModel)> =
            grid.iter().map(|&t| self.profiled_cost(t)).collect();
        let k = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if costs[k].1.amplitude == 0.0 {
            return costs[k].1;
        }
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(SCAN_POINTS - 1)];
        let refined = self.golden(a, b);
        if refined.0 <= costs[k].0 {
            refined.1
        } else {
            costs[k].1
        }
    }

    fn golden(&self, mut a: f64, mut b: f64) -> (f64, ResponseModel) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.profiled_cost(c);
        let mut fd = self.profiled_cost(d);
        for _ in 0..200 {
            if (b - a).abs() < GOLDEN_TOL {
                break;
            }
            if fc.0 < fd.0 {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.profiled_cost(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.profiled_cost(d);
            }
        }
        if fc.0 < fd.0 {
            fc
        } else {
            fd
        }
    }

    /// Levenberg-Marquardt over (baseline, amplitude, half distance),
    /// accepting only cost-decreasing steps that keep the model valid.
    fn polish(&self, start: ResponseModel) -> ResponseModel {
        let mut m = start;
        let mut cost = self.cost(&m);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITERATIONS {
            let (jtj, jtr) = self.normal_equations(&m);
            let mut accepted = None;
            for _ in 0..30 {
                let mut a = jtj;
                for (i, row) in a.iter_mut().enumerate() {
                    row[i] += lambda * jtj[i][i].max(1e-300);
                }
                let Some(step) = solve3(a, jtr) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = ResponseModel {
                    baseline: m.baseline + step[0],
                    amplitude: m.amplitude + step[1],
                    half_distance_mm: m.half_distance_mm + step[2],
                    noise_sigma: m.noise_sigma,
                };
                if trial.amplitude >= 0.0 && trial.half_distance_mm > 0.0 {
                    let c = self.cost(&trial);
                    if c < cost {
                        accepted = Some((trial, c, step));
                        break;
                    }
                }
                lambda *= 10.0;
            }
            let Some((trial, c, step)) = accepted else {
                break;
            };
            let rel = [
                step[0] / m.baseline.abs().max(1e-12),
                step[1] / m.amplitude.abs().max(1e-12),
                step[2] / m.half_distance_mm,
            ]
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
            m = trial;
            cost = c;
            lambda = (lambda / 10.0).max(1e-12);
            if rel < PARAM_TOL {
                break;
            }
        }
        m
    }

    fn normal_equations(&self, m: &ResponseModel) -> ([[f64; 3]; 3], [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for s in self.samples {
            let g = m.shape(s.distance_mm);
            let u = s.distance_mm / m.half_distance_mm;
            // d/d(d0) of A / (1 + u^2) with u = d / d0
            let dd0 = m.amplitude * 2.0 * u * u * g * g / m.half_distance_mm;
            let j = [1.0, g, dd0];
            let r = s.reading - (m.baseline + m.amplitude * g);
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        (jtj, jtr)
    }
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 0.0) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
