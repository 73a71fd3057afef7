"""Offline/online evaluation, the four-model roster, and report emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distill import DistillConfig, TrainLog, distill_student, substitute, train_teacher
from .domainxfer import DEFAULT_TARGETS, build_translation_table
from .errors import ConfigError, UsageError
from .model import ModelBundle, activation_heatmap, prune_to_dominant
from .simworld import (
    EPISODE_FRAMES,
    EXPERT,
    Dataset,
    SceneState,
    VehicleState,
    collect_dataset,
    default_weather_table,
    get_track,
    render,
    run_episode,
)
from .simworld.weather import N_WEATHERS

F32 = np.float32

ROSTER_MODELS = ("oracle", "teacher", "ours", "ours_aux1")


# -- offline ------------------------------------------------------------------


def eval_offline(model, eval_sets: dict[int, Dataset], chunk: int = 256) -> dict[int, float]:
    """Mean absolute error of the combined head, per weather."""
    out: dict[int, float] = {}
    for weather, ds in sorted(eval_sets.items()):
        labels = []
        preds = []
        for i in range(0, len(ds.samples), chunk):
            part = ds.samples[i : i + chunk]
            for s in part:
                if s.label is None:
                    raise UsageError(f"eval sample without label in weather {weather} set")
            labels.append(np.array([s.label for s in part], dtype=F32))
            preds.append(model.predict_batch(np.stack([s.image for s in part])))
        y = np.concatenate(labels)
        p = np.concatenate(preds)
        out[weather] = float(np.mean(np.abs(y - p)))
    return out


# -- online ---------------------------------------------------------------------


@dataclass(frozen=True)
class OnlineRow:
    weather: int
    turn: int
    in_lane_pct: float


def eval_online(policy, track_id: str, weather_ids=None, turns=None,
                frames: int = EPISODE_FRAMES, weathers=None, seed: int = 0
                ) -> list[OnlineRow]:
    """Run a fixed-seed episode per (weather, turn) and record in-lane %."""
    track = get_track(track_id)
    weathers = weathers if weathers is not None else default_weather_table()
    weather_ids = list(weather_ids) if weather_ids is not None else list(range(N_WEATHERS))
    turns = list(turns) if turns is not None else list(track.turns)
    rows = []
    for w in weather_ids:
        for turn in turns:
            rec = run_episode(track, turn, w, policy, weathers, frames=frames, seed=seed)
            rows.append(OnlineRow(w, turn.index, rec.in_lane_pct))
    return rows


def per_weather_means(rows: list[OnlineRow]) -> dict[int, float]:
    acc: dict[int, list[float]] = {}
    for r in rows:
        acc.setdefault(r.weather, []).append(r.in_lane_pct)
    return {w: float(np.mean(v)) for w, v in sorted(acc.items())}


def overall_mean(rows: list[OnlineRow]) -> float:
    return float(np.mean([r.in_lane_pct for r in rows]))


# -- roster ----------------------------------------------------------------------


@dataclass
class RosterConfig:
    train_track: str = "TrackB"
    eval_track: str = "TrackA"
    n_total: int = 6500
    n_labeled: int = 3200
    eval_samples_per_weather: int = 300
    seed: int = 0
    teacher_epochs: int = 12
    distill_epochs: int = 8
    batch_size: int = 32
    lr: float = 1e-3
    lambda_soft: float = 0.5
    translator_kind: str = "parametric"
    translator_fidelity: float = 0.9
    translator_targets: tuple[int, ...] = DEFAULT_TARGETS
    frames: int = EPISODE_FRAMES
    prune_threshold: float = 0.1
    heatmap_weathers: tuple[int, int] = (0, 9)


@dataclass
class EvalReport:
    model_id: str
    offline_mae: dict[int, float]
    online_rows: list[OnlineRow]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.offline_mae) != set(range(N_WEATHERS)):
            raise UsageError("report must cover exactly 15 weathers offline")
        for w, mae in self.offline_mae.items():
            if mae < 0:
                raise UsageError(f"negative MAE for weather {w}")
        for r in self.online_rows:
            if not (0.0 <= r.in_lane_pct <= 100.0):
                raise UsageError("in-lane percentage outside [0,100]")

    @property
    def online_per_weather(self) -> dict[int, float]:
        return per_weather_means(self.online_rows)

    @property
    def online_overall(self) -> float:
        return overall_mean(self.online_rows)


def _oracle_dataset(cfg: RosterConfig, weathers) -> Dataset:
    """Fully labeled eval-track data cycling through all 15 weathers."""
    ds = collect_dataset(cfg.eval_track, 0, cfg.n_total, cfg.n_total,
                         seed=cfg.seed + 77, weathers=weathers)
    for i, s in enumerate(ds.samples):
        w = i % N_WEATHERS
        if w != 0:
            s.scene = s.scene.with_weather(w)
            s.weather = w
            s.image = render(s.scene, weathers)
    ds.provenance["weather"] = "cycled-0-14"
    return ds


def build_eval_sets(cfg: RosterConfig, weathers) -> dict[int, Dataset]:
    return {
        w: collect_dataset(cfg.eval_track, w, cfg.eval_samples_per_weather,
                           cfg.eval_samples_per_weather, seed=cfg.seed + 1000 + w,
                           weathers=weathers)
        for w in range(N_WEATHERS)
    }


def run_roster(cfg: RosterConfig, out_dir: str | Path,
               progress=None) -> dict[str, EvalReport]:
    """Train and evaluate the four-model roster; write all report files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    weathers = default_weather_table()
    say = progress or (lambda msg: None)

    say("collecting training data")
    train_ds = collect_dataset(cfg.train_track, 0, cfg.n_total, cfg.n_labeled,
                               seed=cfg.seed, weathers=weathers)
    say("collecting evaluation sets")
    eval_sets = build_eval_sets(cfg, weathers)

    teacher_cfg = DistillConfig(lambda_soft=0.0, domain_mix=(0,),
                                epochs=cfg.teacher_epochs, batch_size=cfg.batch_size,
                                lr=cfg.lr, seed=cfg.seed)
    say("training teacher")
    teacher, teacher_log = train_teacher(train_ds, teacher_cfg)

    translators = build_translation_table(cfg.translator_targets,
                                          kind=cfg.translator_kind,
                                          fidelity=cfg.translator_fidelity)
    student_cfg = DistillConfig(lambda_soft=cfg.lambda_soft,
                                domain_mix=(0,) + tuple(cfg.translator_targets),
                                epochs=cfg.distill_epochs, batch_size=cfg.batch_size,
                                lr=cfg.lr, seed=cfg.seed + 1)
    say("distilling student")
    student, student_log = distill_student(teacher, train_ds, translators,
                                           student_cfg, weathers)

    say("training oracle")
    oracle_ds = _oracle_dataset(cfg, weathers)
    oracle_cfg = DistillConfig(lambda_soft=0.0, domain_mix=(0,),
                               epochs=cfg.teacher_epochs, batch_size=cfg.batch_size,
                               lr=cfg.lr, seed=cfg.seed + 2)
    oracle, oracle_log = train_teacher(oracle_ds, oracle_cfg)

    # "Ours (auxiliary network 1)" analogue: keep whichever head dominates
    pruned = prune_to_dominant(student)

    models = {
        "oracle": oracle,
        "teacher": teacher,
        "ours": student,
        "ours_aux1": pruned,
    }
    logs = {"teacher": teacher_log, "ours": student_log, "oracle": oracle_log}

    reports: dict[str, EvalReport] = {}
    for name, model in models.items():
        say(f"evaluating {name} offline")
        mae = eval_offline(model, eval_sets)
        say(f"evaluating {name} online")
        rows = eval_online(substitute(model), cfg.eval_track, weathers=weathers,
                           frames=cfg.frames, seed=cfg.seed)
        reports[name] = EvalReport(name, mae, rows, metadata={
            "track": cfg.eval_track, "seed": cfg.seed, "frames": cfg.frames,
            "turns": len(get_track(cfg.eval_track).turns),
        })

    say("writing reports")
    teacher.save(out / "teacher.model")
    student.save(out / "student.model")
    oracle.save(out / "oracle.model")
    (out / "pruned.json").write_text(json.dumps(
        {"retained": pruned.retained, "alphas": [float(a) for a in pruned.alphas]},
        indent=2) + "\n")
    _write_reports(out, cfg, reports, logs, student, weathers)
    return reports


# -- report files -----------------------------------------------------------------


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    """Binary P6 portable pixmap from an HxWx3 [0,1] image."""
    arr = np.clip(np.asarray(image) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    h, w, _ = arr.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(arr.tobytes())


def _write_reports(out: Path, cfg: RosterConfig, reports: dict[str, EvalReport],
                   logs: dict[str, TrainLog], student: ModelBundle, weathers) -> None:
    lines = ["weather,model,mae"]
    for name in ROSTER_MODELS:
        for w in range(N_WEATHERS):
            lines.append(f"{w},{name},{reports[name].offline_mae[w]:.6f}")
    (out / "offline.csv").write_text("\n".join(lines) + "\n")

    lines = ["weather,model,turn,in_lane_pct"]
    for name in ROSTER_MODELS:
        for r in reports[name].online_rows:
            lines.append(f"{r.weather},{name},{r.turn},{r.in_lane_pct:.4f}")
    (out / "online.csv").write_text("\n".join(lines) + "\n")

    header = "model," + ",".join(f"w{w}" for w in range(N_WEATHERS)) + ",overall"
    lines = [header]
    for name in ROSTER_MODELS:
        means = reports[name].online_per_weather
        row = [name] + [f"{means[w]:.4f}" for w in range(N_WEATHERS)]
        row.append(f"{reports[name].online_overall:.4f}")
        lines.append(",".join(row))
    (out / "table1.csv").write_text("\n".join(lines) + "\n")

    lines = ["model,epoch,a1,a2,a3,a4"]
    for name, log in logs.items():
        for r in log.rows:
            lines.append(f"{name},{r.epoch}," + ",".join(f"{a:.6f}" for a in r.alphas))
    (out / "alphas.csv").write_text("\n".join(lines) + "\n")

    # offline/online divergence pairs, per weather and model
    lines = ["weather,model,offline_mae,online_in_lane_pct"]
    for name in ROSTER_MODELS:
        means = reports[name].online_per_weather
        for w in range(N_WEATHERS):
            lines.append(f"{w},{name},{reports[name].offline_mae[w]:.6f},{means[w]:.4f}")
    (out / "divergence.csv").write_text("\n".join(lines) + "\n")

    for name, log in logs.items():
        (out / f"trainlog_{name}.csv").write_text(log.to_csv())

    track = get_track(cfg.eval_track)
    turn = track.turns[0]
    for w in cfg.heatmap_weathers:
        scene = SceneState(cfg.eval_track,
                           VehicleState(turn.entry_position[0], turn.entry_position[1],
                                        turn.entry_heading),
                           w, rng_stream_id=1234)
        frame = render(scene, weathers)
        write_ppm(out / f"frame_w{w}.ppm", frame)
        write_ppm(out / f"heatmap_w{w}.ppm", activation_heatmap(student, frame))

    (out / "roster_config.json").write_text(
        json.dumps({k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in cfg.__dict__.items()}, indent=2) + "\n")
