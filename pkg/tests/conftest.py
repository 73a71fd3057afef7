"""Shared fixtures: weather table and a small pre-collected dataset."""

import pytest

from weathersteer.simworld import collect_dataset, default_weather_table

# Reduced model geometry for fast gradient/property tests on synthetic
# images (the renderer always emits 64x64; these are for synthetic inputs).
SMALL_MODEL = dict(img_size=32, channels=(3, 4, 5, 6), control_dims=(6, 3))

# Full-resolution model with a thin trunk, for training tests on rendered
# 64x64 frames.
THIN_MODEL = dict(img_size=64, channels=(4, 4, 4, 4), control_dims=(8, 4))


@pytest.fixture(scope="session")
def weathers():
    return default_weather_table()


@pytest.fixture(scope="session")
def small_dataset(weathers):
    """80 expert frames on TrackB, weather 0, 60 of them labeled."""
    return collect_dataset("TrackB", 0, 80, 60, seed=5, weathers=weathers)
