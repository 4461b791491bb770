use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skinloc::fit::sum_squared_residuals;
use skinloc::{fit_response_model, CalibrationSample, ResponseCurve, ResponseModel};

fn noisy_samples(truth: &ResponseModel, sigma: f64, seed: u64) -> Vec<CalibrationSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..100)
        .map(|i| {
            let d = i as f64 * 0.5;
            CalibrationSample {
                distance_mm: d,
                reading: truth.mean_response(d) + noise.sample(&mut rng),
            }
        })
        .collect()
}

/// Best residual RMS over a 200 x 200 grid of (amplitude, half distance),
/// with the baseline solved exactly for each grid point.
fn grid_oracle_rms(samples: &[CalibrationSample]) -> f64 {
    let n = samples.len() as f64;
    let mut best = f64::INFINITY;
    for ia in 0..200 {
        let amplitude = 100.0 + 200.0 * ia as f64 / 199.0;
        for id in 0..200 {
            let d0 = 2.0 + 28.0 * id as f64 / 199.0;
            let shape = |d: f64| amplitude / (1.0 + (d / d0).powi(2));
            let baseline = samples.iter().map(|s| s.reading - shape(s.distance_mm)).sum::<f64>() / n;
            let m = ResponseModel::new(baseline, amplitude, d0, 0.0).unwrap();
            best = best.min(sum_squared_residuals(samples, &m));
        }
    }
    (best / n).sqrt()
}

#[test]
fn fit_is_within_a_fifth_of_the_grid_oracle() {
    let truth = ResponseModel::new(1000.0, 200.0, 10.0, 0.0).unwrap();
    let initial = ResponseModel::new(950.0, 120.0, 4.0, 1.0).unwrap();
    for seed in 0..5 {
        let samples = noisy_samples(&truth, 2.0, seed);
        let fit = fit_response_model(&samples, &initial).unwrap();
        let fit_rms = (sum_squared_residuals(&samples, &fit) / samples.len() as f64).sqrt();
        let oracle = grid_oracle_rms(&samples);
        assert!(fit_rms <= 1.2 * oracle, "seed {seed}: fit {fit_rms} oracle {oracle}");
        assert!(fit_rms <= oracle + 1e-9, "seed {seed}: fit {fit_rms} oracle {oracle}");
        assert!((fit.noise_sigma - 2.0).abs() < 0.5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn refitting_a_converged_model_is_stable(
        baseline in -500.0f64..500.0,
        amplitude in 10.0f64..500.0,
        d0 in 2.0f64..20.0,
        seed in any::<u64>(),
    ) {
        let truth = ResponseModel::new(baseline, amplitude, d0, 0.0).unwrap();
        let samples = noisy_samples(&truth, 1.0, seed);
        let first = fit_response_model(&samples, &truth).unwrap();
        let second = fit_response_model(&samples, &first).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
        prop_assert!(rel(first.baseline, second.baseline) < 1e-9);
        prop_assert!(rel(first.amplitude, second.amplitude) < 1e-9);
        prop_assert!(rel(first.half_distance_mm, second.half_distance_mm) < 1e-9);
        prop_assert!(
            sum_squared_residuals(&samples, &first) <= sum_squared_residuals(&samples, &truth) + 1e-9
        );
    }
}
