//! Distance-to-reading response curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// SNR the default noise level is calibrated to, for a probe directly on a
/// sensor.
pub const CALIBRATION_SNR_DB: f64 = 64.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("amplitude must be finite and >= 0, got {0}")]
    Amplitude(f64),
    #[error("half distance must be finite and > 0, got {0} mm")]
    HalfDistance(f64),
    #[error("noise sigma must be finite and >= 0, got {0}")]
    NoiseSigma(f64),
    #[error("baseline must be finite, got {0}")]
    Baseline(f64),
}

/// Mean sensor reading as a function of probe-to-sensor distance.
///
/// Implementations must be monotone non-increasing in distance and tend to
/// [`ResponseCurve::baseline`] far from the sensor.
pub trait ResponseCurve: Sync {
    fn mean_response(&self, distance_mm: f64) -> f64;
    fn baseline(&self) -> f64;
    /// Standard deviation of a single raw sample.
    fn noise_sigma(&self) -> f64;
}

/// Lorentzian decay `S(d) = S0 + A / (1 + (d / d0)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseModel {
    pub baseline: f64,
    pub amplitude: f64,
    pub half_distance_mm: f64,
    pub noise_sigma: f64,
}

impl ResponseModel {
    pub fn new(
        baseline: f64,
        amplitude: f64,
        half_distance_mm: f64,
        noise_sigma: f64,
    ) -> Result<Self, ResponseError> {
        let m = Self {
            baseline,
            amplitude,
            half_distance_mm,
            noise_sigma,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ResponseError> {
        if !self.baseline.is_finite() {
            return Err(ResponseError::Baseline(self.baseline));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(ResponseError::Amplitude(self.amplitude));
        }
        if !(self.half_distance_mm.is_finite() && self.half_distance_mm > 0.0) {
            return Err(ResponseError::HalfDistance(self.half_distance_mm));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(ResponseError::NoiseSigma(self.noise_sigma));
        }
        Ok(())
    }

    /// Simulator default: baseline-subtracted readings, 100-unit peak,
    /// 5 mm half distance and noise set so a probe sitting on a sensor
    /// yields [`CALIBRATION_SNR_DB`].
    pub fn calibrated_default() -> Self {
        let amplitude = 100.0;
        Self {
            baseline: 0.0,
            amplitude,
            half_distance_mm: 5.0,
            noise_sigma: noise_for_snr(amplitude, CALIBRATION_SNR_DB),
        }
    }

    pub fn with_noise_sigma(self, noise_sigma: f64) -> Self {
        Self {
            noise_sigma,
            ..self
        }
    }

    /// Shape factor `1 / (1 + (d / d0)^2)` in `(0, 1]`.
    pub fn shape(&self, distance_mm: f64) -> f64 {
        let u = distance_mm / self.half_distance_mm;
        1.0 / (1.0 + u * u)
    }
}

/// Per-sample sigma giving `snr_db` for a signal excursion of `amplitude`.
pub fn noise_for_snr(amplitude: f64, snr_db: f64) -> f64 {
    amplitude * 10f64.powf(-snr_db / 20.0)
}

impl ResponseCurve for ResponseModel {
    fn mean_response(&self, distance_mm: f64) -> f64 {
        self.baseline + self.amplitude * self.shape(distance_mm)
    }

    fn baseline(&self) -> f64 {
        self.baseline
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
}

/// Exponential decay `S(d) = S0 + A exp(-d / lambda)`, an alternative
/// curve for the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialResponse {
    pub baseline: f64,
    pub amplitude: f64,
    pub decay_mm: f64,
    pub noise_sigma: f64,
}

impl ResponseCurve for ExponentialResponse {
    fn mean_response(&self, distance_mm: f64) -> f64 {
        self.baseline + self.amplitude * (-distance_mm / self.decay_mm).exp()
    }

    fn baseline(&self) -> f64 {
        self.baseline
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
}

/// One `(distance, reading)` pair used to calibrate a response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub distance_mm: f64,
    pub reading: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> ResponseModel {
        ResponseModel::new(1000.0, 200.0, 10.0, 0.0).unwrap()
    }

    #[test]
    fn lorentzian_fixtures() {
        let m = model();
        assert_eq!(m.mean_response(0.0), 1200.0);
        assert_eq!(m.mean_response(10.0), 1100.0);
        assert!((m.mean_response(1e6) - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        assert!(ResponseModel::new(0.0, -1.0, 1.0, 0.0).is_err());
        assert!(ResponseModel::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ResponseModel::new(0.0, 1.0, 1.0, -0.1).is_err());
        assert!(ResponseModel::new(f64::NAN, 1.0, 1.0, 0.0).is_err());
        ResponseModel::calibrated_default().validate().unwrap();
    }

    #[test]
    fn calibrated_noise_matches_target_snr() {
        let m = ResponseModel::calibrated_default();
        let snr = 20.0 * (m.amplitude / m.noise_sigma).log10();
        assert!((snr - CALIBRATION_SNR_DB).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn response_is_monotone(
            baseline in -1e3f64..1e3,
            amplitude in 0.0f64..1e4,
            d0 in 0.01f64..100.0,
            a in 0.0f64..500.0,
            b in 0.0f64..500.0,
        ) {
            let m = ResponseModel::new(baseline, amplitude, d0, 0.0).unwrap();
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.mean_response(near) >= m.mean_response(far));
            let e = ExponentialResponse { baseline, amplitude, decay_mm: d0, noise_sigma: 0.0 };
            prop_assert!(e.mean_response(near) >= e.mean_response(far));
        }
    }
}
