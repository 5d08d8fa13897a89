"""Smoke test for the kclstm extension module.

Build and install the module first, for example:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/kclstm-*.whl

then run `python python/smoke_test.py`.
"""

import json
import math
import tempfile
from pathlib import Path

import kclstm


def check_utilities():
    assert kclstm.dtw_distance([0.0, 1.0, 2.0], [0.0, 2.0]) == 1.0
    assert kclstm.dtw_distance([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert kclstm.gaussian_kernel([1.0, 2.0], [1.0, 2.0], 0.5) == 1.0
    k = kclstm.gaussian_kernel([0.0], [1.0], 1.0)
    assert math.isclose(k, math.exp(-0.5), rel_tol=1e-15)

    assert kclstm.mase([2.0, 2.0], [0.0, 2.0], [0.0, 2.0, 0.0, 2.0, 0.0, 2.0], 4) == 0.5
    stat, p, verdict = kclstm.diebold_mariano([0.1, -0.2, 0.3, 0.0], [0.1, -0.2, 0.3, 0.0], 1)
    assert (stat, p, verdict) == (0.0, 1.0, "draw")

    smoothed = kclstm.smooth_trace([[0.0], [1.0], [0.0]], window=2, sigma=1000.0)
    assert abs(smoothed[1][0]) < 1e-12
    assert len(smoothed) == 3

    try:
        kclstm.dtw_distance([], [1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("empty sequence accepted")


def check_pipeline():
    series = kclstm.synthesize(kind="sine", n=120, n_outliers=3, seed=1)
    assert len(series) == 120
    assert series.split_index == 102
    assert len(series.outlier_indices) == 3
    assert all(i < series.split_index for i in series.outlier_indices)

    model = kclstm.train(series, hidden_size=8, window_length=6, epochs=20, seed=0)
    again = kclstm.train(series, hidden_size=8, window_length=6, epochs=20, seed=0)
    assert model.to_json() == again.to_json()
    assert math.isfinite(model.final_loss)

    fc = model.forecast(series, 18)
    assert len(fc) == 18 and all(math.isfinite(v) for v in fc)
    print("baseline MASE", kclstm.mase(fc, series.test, series.values, series.split_index))

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.json"
        model.save(str(path))
        assert kclstm.Model.load(str(path)).to_json() == model.to_json()

    fit = kclstm.kclstm_fit(series, hidden_size=8, window_length=6, epochs=20, smoothing_window=2)
    assert fit.corrected.test == series.test
    report = json.loads(fit.report_json())
    assert report["flagged"] == fit.flagged
    assert set(fit.changed) <= set(fit.flagged)
    print("flagged", fit.flagged, "changed", fit.changed, "restored", fit.restored)

    lax = kclstm.kclstm_fit(
        series, hidden_size=8, window_length=6, epochs=20, detection_threshold=1e9
    )
    assert lax.flagged == []
    assert lax.model.to_json() == model.to_json()


if __name__ == "__main__":
    print("kclstm", kclstm.__version__)
    check_utilities()
    check_pipeline()
    print("smoke test passed")
