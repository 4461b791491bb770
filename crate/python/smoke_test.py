"""Smoke test for the skinloc Python extension.

Build and run:
    cargo build --release -p skinloc-py --features extension-module
    cp target/release/libskinloc.so python/skinloc.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import skinloc  # noqa: E402


def main() -> None:
    layout = skinloc.PatchLayout.patch_b()
    assert layout.sensor_count == 30
    assert skinloc.PatchLayout.from_json(layout.to_json()).sensors() == layout.sensors()

    model = skinloc.ResponseModel.calibrated_default()
    assert model.mean_response(0.0) > model.mean_response(10.0)

    plan = skinloc.uniform_probe_plan(layout, 5, 20)
    assert len(plan) == 100

    logs = skinloc.simulate_acquisition(layout, model, plan, seed=7)
    again = skinloc.simulate_acquisition(layout, model, plan, seed=7)
    assert [l.readings for l in logs] == [l.readings for l in again]

    preds = skinloc.localize_all(logs, plan, layout, eta=0.65, pixels_per_cm=32)
    assert all(p is not None for p in preds)
    errors, mean, sigma, rms = skinloc.error_stats(preds, layout)
    assert len(errors) == 30 and sigma < 2.6, sigma

    baseline = [[496.0, 500.0, 504.0]]
    per_sensor, snr_mean = skinloc.compute_snr(baseline, [skinloc.PointLog((0.0, 0.0), [900.0])])
    assert abs(per_sensor[0] - 40.0) < 1e-9 and snr_mean == per_sensor[0]

    truth = skinloc.ResponseModel(10.0, 200.0, 6.0, 0.0)
    ds = [0.5 * i for i in range(60)]
    fitted = skinloc.fit_response_model(ds, [truth.mean_response(d) for d in ds])
    assert math.isclose(fitted.half_distance_mm, 6.0, rel_tol=1e-6), fitted

    try:
        skinloc.uniform_probe_plan(layout, 1, 20)
    except ValueError:
        pass
    else:
        raise AssertionError("rows=1 should be rejected")

    print(f"smoke test ok: sigma_PE {sigma:.3f} mm, mean error {mean:.3f} mm")


if __name__ == "__main__":
    main()
