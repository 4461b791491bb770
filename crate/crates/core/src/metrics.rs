//! Signal-to-noise ratio and prediction-error statistics.

use thiserror::Error;

use crate::layout::SensorSet;
use crate::localize::Prediction;
use crate::sim::PointLog;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no point logs supplied")]
    NoLogs,
    #[error("sensor {sensor_id} has {count} no-contact samples; at least 2 are needed")]
    TooFewBaselineSamples { sensor_id: usize, count: usize },
    #[error("baseline covers {baseline} sensors but logs carry {logs} readings")]
    SensorCountMismatch { baseline: usize, logs: usize },
    #[error("prediction ids do not match the sensor set: {0}")]
    IdMismatch(String),
}

/// Why a sensor's SNR is undefined.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum SnrUndefined {
    #[error("no-contact readings have zero spread")]
    ZeroNoise,
    #[error("peak reading does not exceed the no-contact mean")]
    NoSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport {
    pub per_sensor_db: Vec<Result<f64, SnrUndefined>>,
    /// Mean over sensors with a defined SNR; `None` when there are none.
    pub mean_db: Option<f64>,
}

/// `20 log10((max_l S_l - S0) / sigma0)` per sensor, where `S0` and `sigma0`
/// are the mean and sample standard deviation of the no-contact window.
pub fn compute_snr(baseline_samples: &[Vec<f64>], logs: &[PointLog]) -> Result<SnrReport, MetricsError> {
    if logs.is_empty() {
        return Err(MetricsError::NoLogs);
    }
    if let Some(l) = logs.iter().find(|l| l.readings.len() != baseline_samples.len()) {
        return Err(MetricsError::SensorCountMismatch {
            baseline: baseline_samples.len(),
            logs: l.readings.len(),
        });
    }
    let per_sensor_db = baseline_samples
        .iter()
        .enumerate()
        .map(|(i, samples)| {
            if samples.len() < 2 {
                return Err(MetricsError::TooFewBaselineSamples {
                    sensor_id: i,
                    count: samples.len(),
                });
            }
            let (s0, sigma0) = mean_and_sample_std(samples);
            let peak = logs
                .iter()
                .map(|l| l.readings[i])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(snr_db(peak - s0, sigma0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let defined: Vec<f64> = per_sensor_db.iter().filter_map(|r| r.ok()).collect();
    let mean_db = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(SnrReport {
        per_sensor_db,
        mean_db,
    })
}

pub fn snr_db(excursion: f64, sigma0: f64) -> Result<f64, SnrUndefined> {
    if !(sigma0 > 0.0) {
        return Err(SnrUndefined::ZeroNoise);
    }
    if !(excursion > 0.0) {
        return Err(SnrUndefined::NoSignal);
    }
    Ok(20.0 * (excursion / sigma0).log10())
}

fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Prediction error over one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats {
    /// Euclidean distance predicted to true, indexed by sensor id.
    pub per_sensor_error_mm: Vec<f64>,
    pub mean_error_mm: f64,
    /// Population standard deviation of the per-sensor errors.
    pub sigma_pe_mm: f64,
    /// Root mean square of the per-sensor errors.
    pub rms_error_mm: f64,
}

pub fn error_stats(predictions: &[Prediction], truth: &SensorSet) -> Result<ErrorStats, MetricsError> {
    if predictions.len() != truth.len() {
        return Err(MetricsError::IdMismatch(format!(
            "{} predictions for {} sensors",
            predictions.len(),
            truth.len()
        )));
    }
    let mut errors = vec![f64::NAN; truth.len()];
    for p in predictions {
        let Some(t) = truth.position(p.sensor_id) else {
            return Err(MetricsError::IdMismatch(format!("unknown sensor {}", p.sensor_id)));
        };
        if !errors[p.sensor_id].is_nan() {
            return Err(MetricsError::IdMismatch(format!("sensor {} predicted twice", p.sensor_id)));
        }
        errors[p.sensor_id] = p.position_mm.distance(&t);
    }
    Ok(summarize(errors))
}

/// Statistics of an already computed list of errors.
pub fn summarize(per_sensor_error_mm: Vec<f64>) -> ErrorStats {
    let n = per_sensor_error_mm.len().max(1) as f64;
    let mean = per_sensor_error_mm.iter().sum::<f64>() / n;
    let var = per_sensor_error_mm.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let ms = per_sensor_error_mm.iter().map(|e| e * e).sum::<f64>() / n;
    ErrorStats {
        per_sensor_error_mm,
        mean_error_mm: mean,
        sigma_pe_mm: var.sqrt(),
        rms_error_mm: ms.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{make_patch_b, PatchLayout, Point2};
    use proptest::prelude::*;

    fn log(readings: Vec<f64>) -> PointLog {
        PointLog {
            probe_mm: Point2::new(0.0, 0.0),
            readings,
            n_samples: 1,
        }
    }

    fn single(peak: f64) -> f64 {
        let base = vec![vec![496.0, 500.0, 504.0]];
        compute_snr(&base, &[log(vec![500.0]), log(vec![peak])]).unwrap().per_sensor_db[0].unwrap()
    }

    #[test]
    fn snr_fixtures() {
        assert!(single(504.0).abs() < 1e-9);
        assert!((single(900.0) - 40.0).abs() < 1e-9);
        assert!((single(700.0) - 20.0 * 50f64.log10()).abs() < 1e-9);
        assert!((single(700.0) - 33.979_400_086_720_38).abs() < 1e-9);
    }

    #[test]
    fn snr_undefined_cases() {
        let base = vec![vec![5.0, 5.0], vec![1.0, 3.0]];
        let r = compute_snr(&base, &[log(vec![9.0, 1.0])]).unwrap();
        assert_eq!(r.per_sensor_db[0], Err(SnrUndefined::ZeroNoise));
        assert_eq!(r.per_sensor_db[1], Err(SnrUndefined::NoSignal));
        assert_eq!(r.mean_db, None);
        assert_eq!(
            compute_snr(&[vec![1.0]], &[log(vec![2.0])]),
            Err(MetricsError::TooFewBaselineSamples { sensor_id: 0, count: 1 })
        );
        assert_eq!(compute_snr(&base, &[]), Err(MetricsError::NoLogs));
        assert!(matches!(
            compute_snr(&base, &[log(vec![1.0])]),
            Err(MetricsError::SensorCountMismatch { .. })
        ));
    }

    fn pred(id: usize, x: f64, y: f64) -> Prediction {
        Prediction {
            sensor_id: id,
            position_mm: Point2::new(x, y),
            support_count: 1,
            eta: 0.65,
            near_hull_edge: false,
        }
    }

    #[test]
    fn error_fixtures() {
        let truth = make_patch_b().sensors();
        let mut preds: Vec<Prediction> = truth
            .positions_mm()
            .iter()
            .enumerate()
            .map(|(i, p)| pred(i, p.x, p.y))
            .collect();
        let exact = error_stats(&preds, &truth).unwrap();
        assert_eq!(exact.sigma_pe_mm, 0.0);
        assert_eq!(exact.mean_error_mm, 0.0);

        preds[0] = pred(0, 5.5, 21.3);
        preds[29] = pred(29, 148.8, 7.4);
        let s = error_stats(&preds, &truth).unwrap();
        assert!((s.per_sensor_error_mm[0] - 1.5).abs() < 1e-9);
        assert!((s.per_sensor_error_mm[29] - 0.2f64.hypot(0.4)).abs() < 1e-9);
        assert!((s.per_sensor_error_mm[29] - 0.447).abs() < 1e-3);
    }

    #[test]
    fn error_ids_must_match() {
        let truth = make_patch_b().sensors();
        let preds: Vec<Prediction> = (0..30).map(|i| pred(i.min(28), 0.0, 0.0)).collect();
        assert!(matches!(error_stats(&preds, &truth), Err(MetricsError::IdMismatch(_))));
        assert!(matches!(error_stats(&preds[..3], &truth), Err(MetricsError::IdMismatch(_))));
    }

    #[test]
    fn single_sensor_patch_has_zero_sigma() {
        let l = PatchLayout::new(10.0, 10.0, vec![5.0], vec![5.0]).unwrap();
        let s = error_stats(&[pred(0, 7.0, 5.0)], &l.sensors()).unwrap();
        assert_eq!(s.sigma_pe_mm, 0.0);
        assert_eq!(s.mean_error_mm, 2.0);
        assert_eq!(s.rms_error_mm, 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn snr_scale_and_shift_invariant(
            base in proptest::collection::vec(-10.0f64..10.0, 3..20),
            peak in 20.0f64..500.0,
            k in 0.01f64..100.0,
            c in -1e3f64..1e3,
        ) {
            let r0 = compute_snr(&[base.clone()], &[log(vec![peak])]).unwrap().per_sensor_db[0];
            let scaled: Vec<f64> = base.iter().map(|v| v * k).collect();
            let r1 = compute_snr(&[scaled], &[log(vec![peak * k])]).unwrap().per_sensor_db[0];
            let shifted: Vec<f64> = base.iter().map(|v| v + c).collect();
            let r2 = compute_snr(&[shifted], &[log(vec![peak + c])]).unwrap().per_sensor_db[0];
            let (r0, r1, r2) = (r0.unwrap(), r1.unwrap(), r2.unwrap());
            prop_assert!((r0 - r1).abs() < 1e-9);
            prop_assert!((r0 - r2).abs() < 1e-6);
        }

        #[test]
        fn errors_are_symmetric(
            pts in proptest::collection::vec((0.0f64..152.4, 0.0f64..25.4), 30),
        ) {
            let truth = make_patch_b().sensors();
            let preds: Vec<Prediction> = pts.iter().enumerate().map(|(i, &(x, y))| pred(i, x, y)).collect();
            let forward = error_stats(&preds, &truth).unwrap();
            for (i, (p, t)) in preds.iter().zip(truth.positions_mm()).enumerate() {
                prop_assert_eq!(forward.per_sensor_error_mm[i], t.distance(&p.position_mm));
                prop_assert!(forward.per_sensor_error_mm[i] >= 0.0);
            }
        }
    }
}
