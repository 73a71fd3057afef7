"""Datasets of driver-view frames with partial expert labels.

On-disk layout (one directory per dataset):
  manifest.json   sample count, labeled count, seed, weather id, track id,
                  format version
  images.bin      n * 64*64*3 float32 little-endian, row-major, channel-last
  labels.json     {"sample index": steering} for labeled samples only
  scenes.json     per-sample scene state (track id, pose, weather, stream id)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, UsageError
from .expert import expert_steering_state
from .render import IMG_SIZE, render
from .scene import SceneState
from .track import get_track
from .vehicle import DT, VehicleState, step, normalize_angle
from .weather import WeatherParams

FORMAT_VERSION = 1
PERTURB_EVERY = 10  # frames between injected pose perturbations
PERTURB_LATERAL = 0.5  # meters
PERTURB_HEADING = np.radians(5.0)


@dataclass
class Sample:
    image: np.ndarray  # 64x64x3 float32 in [0,1]
    label: float | None  # normalized steering, None if unlabeled
    scene: SceneState
    weather: int


@dataclass
class Dataset:
    samples: list[Sample]
    provenance: dict

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labeled_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.samples) if s.label is not None]

    def labeled_subset(self) -> "Dataset":
        subset = [self.samples[i] for i in self.labeled_indices]
        prov = dict(self.provenance, subset="labeled")
        return Dataset(subset, prov)


def collect_dataset(track_id: str, weather: int, n_total: int, n_labeled: int,
                    seed: int, weathers: dict[int, WeatherParams]) -> Dataset:
    """Drive the expert around the track, perturbing the pose every few
    frames for state diversity; label a seed-chosen uniform subset."""
    if n_labeled > n_total:
        raise UsageError(f"n_labeled={n_labeled} exceeds n_total={n_total}")
    if weather not in weathers:
        raise ConfigError(f"unknown weather id {weather}")
    track = get_track(track_id)
    rng = np.random.Generator(np.random.PCG64(seed))
    start_s = float(rng.uniform(0.0, track.length))
    p = track.point_at(start_s)
    state = VehicleState(float(p[0]), float(p[1]), track.heading_at(start_s))

    samples: list[Sample] = []
    for k in range(n_total):
        if k % PERTURB_EVERY == 0 and k > 0:
            s, _ = track.locate((state.x, state.y))
            base = track.point_at(s)
            h = track.heading_at(s)
            off = float(rng.uniform(-PERTURB_LATERAL, PERTURB_LATERAL))
            dh = float(rng.uniform(-PERTURB_HEADING, PERTURB_HEADING))
            state = VehicleState(
                float(base[0]) - off * np.sin(h),
                float(base[1]) + off * np.cos(h),
                normalize_angle(h + dh),
            )
        stream = int(rng.integers(0, 2**63))
        scene = SceneState(track_id, state, weather, stream)
        image = render(scene, weathers)
        label = expert_steering_state(track, state.x, state.y, state.heading)
        samples.append(Sample(image, label, scene, weather))
        state = step(state, label, DT)

    labeled = set(rng.choice(n_total, size=n_labeled, replace=False).tolist())
    for i in range(n_total):
        if i not in labeled:
            samples[i].label = None

    prov = {"track": track_id, "weather": weather, "seed": seed,
            "n_total": n_total, "n_labeled": n_labeled}
    return Dataset(samples, prov)


# -- disk format --------------------------------------------------------------


def save_dataset(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    prov = ds.provenance
    manifest = {
        "format_version": FORMAT_VERSION,
        "n_total": len(ds.samples),
        "n_labeled": len(ds.labeled_indices),
        "seed": prov.get("seed"),
        "weather": prov.get("weather"),
        "track": prov.get("track"),
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    stack = np.stack([s.image for s in ds.samples]).astype("<f4")
    (path / "images.bin").write_bytes(stack.tobytes())
    labels = {str(i): ds.samples[i].label for i in ds.labeled_indices}
    (path / "labels.json").write_text(json.dumps(labels) + "\n")
    scenes = [
        {"track": s.scene.track_id, "x": s.scene.vehicle.x, "y": s.scene.vehicle.y,
         "heading": s.scene.vehicle.heading, "speed": s.scene.vehicle.speed,
         "weather": s.scene.weather, "stream": s.scene.rng_stream_id}
        for s in ds.samples
    ]
    (path / "scenes.json").write_text(json.dumps(scenes) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read dataset manifest in {path}: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported dataset format version in {path}")
    n = manifest["n_total"]
    raw = np.frombuffer((path / "images.bin").read_bytes(), dtype="<f4")
    images = raw.reshape(n, IMG_SIZE, IMG_SIZE, 3).astype(np.float32)
    labels = {int(k): v for k, v in json.loads((path / "labels.json").read_text()).items()}
    scenes = json.loads((path / "scenes.json").read_text())
    samples = []
    for i in range(n):
        sc = scenes[i]
        scene = SceneState(sc["track"], VehicleState(sc["x"], sc["y"], sc["heading"], sc["speed"]),
                           sc["weather"], sc["stream"])
        samples.append(Sample(images[i], labels.get(i), scene, sc["weather"]))
    prov = {"track": manifest["track"], "weather": manifest["weather"],
            "seed": manifest["seed"], "n_total": n, "n_labeled": manifest["n_labeled"]}
    return Dataset(samples, prov)
