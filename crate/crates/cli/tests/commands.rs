use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use skinloc::io::{
    calibration_to_csv, model_from_csv, point_logs_from_csv, predictions_from_csv, predictions_to_csv,
    sweep_from_csv,
};
use skinloc::{
    localize_all, make_patch_b, simulate_acquisition, uniform_probe_plan, CalibrationSample, ResponseCurve,
    ResponseModel,
};

fn skinloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skinloc"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = skinloc(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn single_json_line(bytes: &[u8]) -> serde_json::Value {
    let text = String::from_utf8_lossy(bytes);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn simulate_writes_one_row_per_probe() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--layout", "patch-b", "--seed", "7", "--out", "logs.csv"]);
    let text = fs::read_to_string(dir.path().join("logs.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 32);
    assert_eq!(lines.count(), 100);
}

#[test]
fn bad_rows_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = skinloc(dir.path(), &["simulate", "--rows", "1", "--out", "logs.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = single_json_line(&out.stderr);
    assert!(err["message"].as_str().unwrap().contains("rows"));
    assert!(!dir.path().join("logs.csv").exists());
}

#[test]
fn unparseable_flags_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--eta", "abc", "--out", "x.csv"],
        vec!["localize", "--nope"],
        vec!["frobnicate"],
    ] {
        let out = skinloc(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        single_json_line(&out.stderr);
    }
    let out = skinloc(dir.path(), &["sweep-count", "--eta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(single_json_line(&out.stderr)["message"].as_str().unwrap().contains("eta"));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = skinloc(dir.path(), &["simulate", "--out", "missing/dir/logs.csv"]);
    assert_eq!(out.status.code(), Some(1));
    single_json_line(&out.stderr);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for name in ["a", "b"] {
        ok(
            p,
            &[
                "simulate",
                "--seed",
                "3",
                "--out",
                &format!("{name}.csv"),
                "--no-contact-out",
                &format!("{name}_nc.csv"),
            ],
        );
        ok(p, &["localize", "--logs", &format!("{name}.csv"), "--out", &format!("{name}_pred.csv")]);
    }
    for (x, y) in [("a.csv", "b.csv"), ("a_nc.csv", "b_nc.csv"), ("a_pred.csv", "b_pred.csv")] {
        assert_eq!(fs::read(p.join(x)).unwrap(), fs::read(p.join(y)).unwrap());
    }
}

#[test]
fn localize_ignores_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--seed", "5", "--out", "logs.csv"]);
    let text = fs::read_to_string(p.join("logs.csv")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    lines.swap(10, 60);
    fs::write(p.join("shuffled.csv"), format!("{header}\n{}\n", lines.join("\n"))).unwrap();
    let a = ok(p, &["localize", "--logs", "logs.csv", "--layout", "patch-b", "--out", "a.csv"]);
    let b = ok(p, &["localize", "--logs", "shuffled.csv", "--layout", "patch-b", "--out", "b.csv"]);
    assert_eq!(a, b);
    assert_eq!(fs::read(p.join("a.csv")).unwrap(), fs::read(p.join("b.csv")).unwrap());
}

#[test]
fn missing_cell_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--seed", "5", "--out", "logs.csv"]);
    let text = fs::read_to_string(p.join("logs.csv")).unwrap();
    let kept: Vec<&str> = text.lines().enumerate().filter(|&(i, _)| i != 8).map(|(_, l)| l).collect();
    fs::write(p.join("holey.csv"), kept.join("\n") + "\n").unwrap();
    let out = skinloc(p, &["localize", "--logs", "holey.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = single_json_line(&out.stderr)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("row 0") && msg.contains("col 7"), "{msg}");
}

#[test]
fn file_round_trip_matches_in_process_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--seed", "11", "--out", "logs.csv", "--layout-out", "layout.json"]);
    let summary: serde_json::Value = serde_json::from_str(&ok(
        p,
        &[
            "localize",
            "--logs",
            "logs.csv",
            "--layout",
            "layout.json",
            "--ppcm",
            "32",
            "--out",
            "pred.csv",
            "--errors-out",
            "errors.csv",
        ],
    ))
    .unwrap();

    let layout = make_patch_b();
    let plan = uniform_probe_plan(&layout, 5, 20).unwrap();
    let logs = simulate_acquisition(&layout, &ResponseModel::calibrated_default(), &plan, 50, 2.0, 11).unwrap();
    let direct: Vec<_> = localize_all(&logs, &plan, &layout, 0.65, 32)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let from_file = predictions_from_csv(&fs::read_to_string(p.join("pred.csv")).unwrap()).unwrap();
    assert_eq!(from_file.len(), 30);
    for (a, b) in from_file.iter().zip(&direct) {
        assert_eq!(a.sensor_id, b.sensor_id);
        assert_eq!(a.position_mm.x.to_bits(), b.position_mm.x.to_bits());
        assert_eq!(a.position_mm.y.to_bits(), b.position_mm.y.to_bits());
        assert_eq!(a.support_count, b.support_count);
    }
    let stats = skinloc::error_stats(&direct, &layout.sensors()).unwrap();
    assert_eq!(summary["sigma_pe_mm"].as_f64().unwrap().to_bits(), stats.sigma_pe_mm.to_bits());

    let logs_text = fs::read_to_string(p.join("logs.csv")).unwrap();
    assert_eq!(point_logs_from_csv(&logs_text, 50).unwrap(), logs);
    let pred_text = fs::read_to_string(p.join("pred.csv")).unwrap();
    assert_eq!(predictions_to_csv(&predictions_from_csv(&pred_text).unwrap()), pred_text);
    assert_eq!(fs::read_to_string(p.join("errors.csv")).unwrap().lines().count(), 31);
}

#[test]
fn fit_recovers_generator() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let truth = ResponseModel::new(1000.0, 200.0, 10.0, 0.0).unwrap();
    let samples: Vec<CalibrationSample> = (0..100)
        .map(|i| {
            let d = i as f64 * 0.4;
            CalibrationSample {
                distance_mm: d,
                reading: truth.mean_response(d),
            }
        })
        .collect();
    fs::write(p.join("cal.csv"), calibration_to_csv(&samples)).unwrap();
    ok(p, &["fit", "--calibration", "cal.csv", "--out", "model.csv"]);
    let m = model_from_csv(&fs::read_to_string(p.join("model.csv")).unwrap()).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(m.baseline, 1000.0) < 1e-6);
    assert!(rel(m.amplitude, 200.0) < 1e-6);
    assert!(rel(m.half_distance_mm, 10.0) < 1e-6);
}

#[test]
fn sweep_count_writes_one_row_per_count_and_trial() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["sweep-count", "--trials", "3", "--ppcm", "8", "--out", "sweep.csv"]);
    let rows = sweep_from_csv(&fs::read_to_string(p.join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4 * 3);
    let grids: Vec<(f64, f64)> = rows.iter().step_by(3).map(|r| (r.0, r.1)).collect();
    assert_eq!(grids, vec![(2.0, 5.0), (3.0, 10.0), (4.0, 15.0), (5.0, 20.0)]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("run.json"),
        r#"{"rows": 3, "cols": 10, "seed": 9, "out": "from_file.csv"}"#,
    )
    .unwrap();
    ok(p, &["simulate", "--config", "run.json", "--cols", "4"]);
    let text = fs::read_to_string(p.join("from_file.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 4);

    fs::write(p.join("bad.json"), r#"{"rowz": 3}"#).unwrap();
    let out = skinloc(p, &["simulate", "--config", "bad.json", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(single_json_line(&out.stderr)["error"], "invalid_config");
}

#[test]
fn snr_needs_both_inputs_or_neither() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--out", "logs.csv", "--no-contact-out", "nc.csv"]);
    let out = skinloc(p, &["snr", "--logs", "logs.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&ok(p, &["snr", "--logs", "logs.csv", "--no-contact", "nc.csv", "--out", "snr.csv"]))
            .unwrap();
    let in_process: serde_json::Value = serde_json::from_str(&ok(p, &["snr"])).unwrap();
    assert_eq!(summary["mean_snr_db"], in_process["mean_snr_db"]);
    assert_eq!(fs::read_to_string(p.join("snr.csv")).unwrap().lines().count(), 31);
}

#[test]
fn maps_dir_holds_one_matrix_per_sensor() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--out", "logs.csv"]);
    ok(p, &["localize", "--logs", "logs.csv", "--ppcm", "4", "--maps-dir", "maps"]);
    let count = fs::read_dir(p.join("maps")).unwrap().count();
    assert_eq!(count, 30);
    let m = fs::read_to_string(p.join("maps/sensor_0.csv")).unwrap();
    assert!(m.lines().count() > 1);
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = skinloc(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["simulate", "fit", "snr", "localize", "sweep-count", "sweep-eta-res"] {
        assert!(text.contains(sub));
    }
}
