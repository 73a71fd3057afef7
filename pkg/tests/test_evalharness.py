"""Evaluation harness: metric oracles, report validation, PPM output."""

import numpy as np
import pytest

from weathersteer.errors import UsageError
from weathersteer.evalharness import (
    ROSTER_MODELS,
    EvalReport,
    OnlineRow,
    RosterConfig,
    eval_offline,
    eval_online,
    overall_mean,
    per_weather_means,
    write_ppm,
)
from weathersteer.simworld import EXPERT, Dataset, Sample
from weathersteer.simworld.weather import N_WEATHERS

F32 = np.float32


class _ConstantModel:
    def __init__(self, value):
        self.value = value

    def predict_batch(self, images):
        return np.full(len(images), self.value, dtype=F32)


def test_offline_mae_direct_sum_oracle(small_dataset):
    labeled = small_dataset.labeled_subset()
    sets = {0: labeled}
    mae = eval_offline(_ConstantModel(0.0), sets)
    expected = float(np.mean([abs(s.label) for s in labeled.samples]))
    assert mae[0] == pytest.approx(expected, abs=1e-6)
    shifted = eval_offline(_ConstantModel(0.25), sets)
    expected2 = float(np.mean([abs(s.label - 0.25) for s in labeled.samples]))
    assert shifted[0] == pytest.approx(expected2, abs=1e-6)


def test_offline_requires_labels(small_dataset):
    unlabeled = Dataset([s for s in small_dataset.samples if s.label is None], {})
    with pytest.raises(UsageError):
        eval_offline(_ConstantModel(0.0), {0: unlabeled})


def test_online_expert_is_perfect(weathers):
    rows = eval_online(EXPERT, "TrackA", weather_ids=[0], weathers=weathers)
    assert len(rows) == 8  # one row per turn
    for r in rows:
        assert r.in_lane_pct == 100.0


def test_online_row_aggregation():
    rows = [OnlineRow(0, 0, 100.0), OnlineRow(0, 1, 50.0),
            OnlineRow(3, 0, 80.0), OnlineRow(3, 1, 60.0)]
    means = per_weather_means(rows)
    assert means == {0: 75.0, 3: 70.0}
    assert overall_mean(rows) == pytest.approx(72.5)


def test_report_validation():
    mae = {w: 0.1 for w in range(N_WEATHERS)}
    rows = [OnlineRow(w, t, 90.0) for w in range(N_WEATHERS) for t in range(2)]
    rep = EvalReport("teacher", mae, rows)
    assert rep.online_overall == pytest.approx(90.0)
    assert set(rep.online_per_weather) == set(range(N_WEATHERS))
    with pytest.raises(UsageError):  # missing weather
        EvalReport("teacher", {w: 0.1 for w in range(14)}, rows)
    with pytest.raises(UsageError):  # negative MAE
        EvalReport("teacher", {**mae, 3: -0.1}, rows)
    with pytest.raises(UsageError):  # pct out of range
        EvalReport("teacher", mae, [OnlineRow(0, 0, 101.0)])


def test_roster_constants():
    assert ROSTER_MODELS == ("oracle", "teacher", "ours", "ours_aux1")
    cfg = RosterConfig()
    assert cfg.train_track == "TrackB" and cfg.eval_track == "TrackA"
    assert cfg.n_total == 6500 and cfg.n_labeled == 3200


def test_write_ppm(tmp_path):
    img = np.zeros((2, 2, 3), dtype=F32)
    img[0, 0] = (1.0, 0.5, 0.0)
    path = tmp_path / "t.ppm"
    write_ppm(path, img)
    data = path.read_bytes()
    assert data.startswith(b"P6\n2 2\n255\n")
    pixels = data.split(b"255\n", 1)[1]
    assert len(pixels) == 12
    assert pixels[0] == 255 and pixels[1] == 128 and pixels[2] == 0
