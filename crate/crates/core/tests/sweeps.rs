use skinloc::{make_patch_b, sweep_eta_resolution, sweep_point_log_count, ResponseModel, TrialSettings};

#[test]
fn finer_resolution_does_not_hurt() {
    let layout = make_patch_b();
    let model = ResponseModel::calibrated_default();
    let res = [8, 32, 128];
    let sweep =
        sweep_eta_resolution(&layout, &model, (5, 20), &[0.65], &res, TrialSettings::default(), 10, 21).unwrap();
    let means: Vec<f64> = res
        .iter()
        .map(|&r| sweep.cell(0.65, r as f64).unwrap().mean_sigma_pe_mm.unwrap())
        .collect();
    for w in means.windows(2) {
        assert!(w[1] <= 1.1 * w[0], "{means:?}");
    }
}

#[test]
fn count_sweep_has_one_outcome_per_trial() {
    let layout = make_patch_b();
    let model = ResponseModel::calibrated_default();
    let counts = [(2, 5), (3, 10)];
    let sweep = sweep_point_log_count(&layout, &model, &counts, 0.65, 8, TrialSettings::default(), 3, 4).unwrap();
    assert_eq!(sweep.cells.len(), 2);
    assert_eq!(sweep.trial_seeds.len(), 3);
    for (cell, &(r, c)) in sweep.cells.iter().zip(&counts) {
        assert_eq!((cell.param1, cell.param2), (r as f64, c as f64));
        assert_eq!(cell.trials.len(), 3);
        assert!(!cell.failed());
    }
}
