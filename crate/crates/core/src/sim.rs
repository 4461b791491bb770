//! Seeded simulation of probe touches on a patch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::layout::{PatchLayout, Point2, ProbePlan};
use crate::response::ResponseCurve;

/// Default radius of the probe-placement error disc.
pub const DEFAULT_PROBE_JITTER_MM: f64 = 2.0;
/// Raw samples averaged into one reading.
pub const DEFAULT_SAMPLES_PER_LOG: usize = 50;

const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("probe at ({x}, {y}) mm lies outside the patch")]
    ProbeOutside { x: f64, y: f64 },
    #[error("n_samples must be >= 1")]
    NoSamples,
    #[error("probe jitter must be finite and >= 0, got {0} mm")]
    Jitter(f64),
    #[error("probe plan is empty")]
    EmptyPlan,
}

/// One probe touch: where it was placed and the averaged reading of every
/// sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct PointLog {
    pub probe_mm: Point2,
    pub readings: Vec<f64>,
    pub n_samples: usize,
}

/// Seed for item `index` of a batch seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ index.wrapping_mul(SEED_MIX)
}

/// Simulates one touch at `probe_mm`.
///
/// The actual contact point is displaced uniformly within a disc of radius
/// `probe_jitter_mm`; each reading is the mean of `n_samples` noisy draws
/// around the response at the contact-to-sensor distance.
pub fn acquire_point_log<M: ResponseCurve + ?Sized>(
    layout: &PatchLayout,
    model: &M,
    probe_mm: Point2,
    n_samples: usize,
    probe_jitter_mm: f64,
    rng_seed: u64,
) -> Result<PointLog, SimError> {
    if !layout.contains(probe_mm) {
        return Err(SimError::ProbeOutside {
            x: probe_mm.x,
            y: probe_mm.y,
        });
    }
    if n_samples == 0 {
        return Err(SimError::NoSamples);
    }
    if !(probe_jitter_mm.is_finite() && probe_jitter_mm >= 0.0) {
        return Err(SimError::Jitter(probe_jitter_mm));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let contact = if probe_jitter_mm > 0.0 {
        let r = probe_jitter_mm * rng.random::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        Point2::new(probe_mm.x + r * theta.cos(), probe_mm.y + r * theta.sin())
    } else {
        probe_mm
    };
    let sigma = model.noise_sigma();
    let readings = layout
        .sensors()
        .positions_mm()
        .iter()
        .map(|s| {
            let mean = model.mean_response(contact.distance(s));
            let noise: f64 = (0..n_samples)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .sum();
            mean + noise / n_samples as f64
        })
        .collect();
    Ok(PointLog {
        probe_mm,
        readings,
        n_samples,
    })
}

/// Runs [`acquire_point_log`] at every plan location, in plan order, with
/// location `i` seeded by `derive_seed(rng_seed, i)`.
pub fn simulate_acquisition<M: ResponseCurve + ?Sized>(
    layout: &PatchLayout,
    model: &M,
    plan: &ProbePlan,
    n_samples: usize,
    probe_jitter_mm: f64,
    rng_seed: u64,
) -> Result<Vec<PointLog>, SimError> {
    if plan.is_empty() {
        return Err(SimError::EmptyPlan);
    }
    plan.locations_mm()
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            acquire_point_log(
                layout,
                model,
                p,
                n_samples,
                probe_jitter_mm,
                derive_seed(rng_seed, i as u64),
            )
        })
        .collect()
}

/// Raw no-contact samples, `n_samples` per sensor.
pub fn acquire_baseline<M: ResponseCurve + ?Sized>(
    layout: &PatchLayout,
    model: &M,
    n_samples: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<f64>>, SimError> {
    if n_samples == 0 {
        return Err(SimError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (s0, sigma) = (model.baseline(), model.noise_sigma());
    Ok((0..layout.sensor_count())
        .map(|_| {
            (0..n_samples)
                .map(|_| s0 + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect())
}
