"""Command-line interface.

One binary with subcommands; global flags --config/--seed/--out.  Exit
codes: 0 success, 2 configuration error, 3 numeric error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .distill import DistillConfig, distill_student, substitute, train_teacher
from .domainxfer import DEFAULT_TARGETS, build_translation_table
from .errors import ConfigError, NumericError
from .evalharness import (
    RosterConfig,
    build_eval_sets,
    eval_offline,
    eval_online,
    per_weather_means,
    run_roster,
    write_ppm,
)
from .model import ModelBundle, activation_heatmap, prune_by_alpha
from .simworld import (
    SceneState,
    VehicleState,
    collect_dataset,
    default_weather_table,
    get_track,
    load_dataset,
    render,
    save_dataset,
)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except NumericError as exc:
            click.echo(f"numeric error: {exc}", err=True)
            sys.exit(3)
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="out", show_default=True)
@click.pass_context
@_handle_errors
def main(ctx, config_path, seed, out_dir):
    """Cross-weather steering transfer workbench."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = _load_config(config_path)
    ctx.obj["seed"] = seed
    ctx.obj["out"] = Path(out_dir)


def _out(ctx) -> Path:
    out = ctx.obj["out"]
    out.mkdir(parents=True, exist_ok=True)
    return out


def _distill_config(cfg: dict, seed: int, **overrides) -> DistillConfig:
    fields = {k: cfg[k] for k in
              ("lambda_soft", "domain_mix", "epochs", "batch_size", "lr",
               "entropy_tau", "translate_labeled") if k in cfg}
    fields.update(overrides)
    fields.setdefault("seed", seed)
    if "domain_mix" in fields:
        fields["domain_mix"] = tuple(fields["domain_mix"])
    return DistillConfig(**fields)


@main.command("gen-data")
@click.option("--track", default="TrackB", show_default=True)
@click.option("--weather", type=int, default=0, show_default=True)
@click.option("--n-total", type=int, default=6500, show_default=True)
@click.option("--n-labeled", type=int, default=3200, show_default=True)
@click.pass_context
@_handle_errors
def gen_data(ctx, track, weather, n_total, n_labeled):
    """Collect an expert-driven dataset and write it to OUT/dataset."""
    weathers = default_weather_table()
    ds = collect_dataset(track, weather, n_total, n_labeled, ctx.obj["seed"], weathers)
    path = _out(ctx) / "dataset"
    save_dataset(ds, path)
    click.echo(f"wrote {len(ds.samples)} samples ({len(ds.labeled_indices)} labeled) to {path}")


@main.command("train-teacher")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.pass_context
@_handle_errors
def train_teacher_cmd(ctx, dataset_path):
    """Train the teacher on the labeled weather-0 samples."""
    ds = load_dataset(dataset_path)
    cfg = _distill_config(ctx.obj["config"], ctx.obj["seed"],
                          lambda_soft=0.0, domain_mix=(0,))
    model, log = train_teacher(ds, cfg)
    out = _out(ctx)
    model.save(out / "teacher.model")
    (out / "trainlog_teacher.csv").write_text(log.to_csv())
    click.echo(f"teacher saved to {out / 'teacher.model'}")


@main.command("distill")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--teacher", "teacher_path", required=True, type=click.Path(exists=True))
@click.pass_context
@_handle_errors
def distill_cmd(ctx, dataset_path, teacher_path):
    """Distill a student over translated multi-domain batches."""
    cfg_file = ctx.obj["config"]
    tblock = cfg_file.get("translator", {})
    targets = tuple(tblock.get("targets", DEFAULT_TARGETS))
    translators = build_translation_table(targets, kind=tblock.get("kind", "parametric"),
                                          fidelity=tblock.get("fidelity", 0.9))
    ds = load_dataset(dataset_path)
    teacher = ModelBundle.load(teacher_path)
    cfg = _distill_config(cfg_file, ctx.obj["seed"],
                          domain_mix=(0,) + targets)
    weathers = default_weather_table()
    student, log = distill_student(teacher, ds, translators, cfg, weathers)
    out = _out(ctx)
    student.save(out / "student.model")
    (out / "trainlog_student.csv").write_text(log.to_csv())
    click.echo(f"student saved to {out / 'student.model'}")


@main.command("eval-offline")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--track", default="TrackA", show_default=True)
@click.option("--samples", type=int, default=300, show_default=True)
@click.pass_context
@_handle_errors
def eval_offline_cmd(ctx, model_path, track, samples):
    """Per-weather offline MAE against the simulator expert."""
    model = ModelBundle.load(model_path)
    cfg = RosterConfig(eval_track=track, eval_samples_per_weather=samples,
                       seed=ctx.obj["seed"])
    sets = build_eval_sets(cfg, default_weather_table())
    mae = eval_offline(model, sets)
    out = _out(ctx)
    lines = ["weather,model,mae"] + [f"{w},{Path(model_path).stem},{m:.6f}"
                                     for w, m in sorted(mae.items())]
    (out / "offline.csv").write_text("\n".join(lines) + "\n")
    for w, m in sorted(mae.items()):
        click.echo(f"weather {w:2d}: MAE {m:.4f}")


@main.command("eval-online")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--track", default="TrackA", show_default=True)
@click.option("--frames", type=int, default=120, show_default=True)
@click.pass_context
@_handle_errors
def eval_online_cmd(ctx, model_path, track, frames):
    """Closed-loop in-lane percentage per weather and turn."""
    model = ModelBundle.load(model_path)
    rows = eval_online(substitute(model), track, frames=frames, seed=ctx.obj["seed"])
    out = _out(ctx)
    name = Path(model_path).stem
    lines = ["weather,model,turn,in_lane_pct"] + [
        f"{r.weather},{name},{r.turn},{r.in_lane_pct:.4f}" for r in rows]
    (out / "online.csv").write_text("\n".join(lines) + "\n")
    for w, pct in per_weather_means(rows).items():
        click.echo(f"weather {w:2d}: in-lane {pct:.2f}%")


@main.command("prune")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--threshold", type=float, default=0.1, show_default=True)
@click.pass_context
@_handle_errors
def prune_cmd(ctx, model_path, threshold):
    """Drop low-alpha auxiliary heads and report the retained set."""
    model = ModelBundle.load(model_path)
    pruned = prune_by_alpha(model, threshold)
    out = _out(ctx)
    info = {"retained": pruned.retained,
            "alphas": [float(a) for a in pruned.alphas],
            "source_alphas": [float(a) for a in model.alphas()]}
    (out / "pruned.json").write_text(json.dumps(info, indent=2) + "\n")
    click.echo(f"retained heads {pruned.retained} -> {out / 'pruned.json'}")


@main.command("heatmap")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--track", default="TrackA", show_default=True)
@click.option("--weather", "weather_ids", type=int, multiple=True, default=(0, 9),
              show_default=True)
@click.pass_context
@_handle_errors
def heatmap_cmd(ctx, model_path, track, weather_ids):
    """First-unit activation heatmaps for sample frames."""
    model = ModelBundle.load(model_path)
    weathers = default_weather_table()
    turn = get_track(track).turns[0]
    out = _out(ctx)
    for w in weather_ids:
        scene = SceneState(track, VehicleState(*turn.entry_position, turn.entry_heading),
                           w, rng_stream_id=1234)
        frame = render(scene, weathers)
        write_ppm(out / f"frame_w{w}.ppm", frame)
        write_ppm(out / f"heatmap_w{w}.ppm", activation_heatmap(model, frame))
        click.echo(f"wrote heatmap_w{w}.ppm")


@main.command("roster")
@click.pass_context
@_handle_errors
def roster_cmd(ctx):
    """Train and evaluate the full model roster; emit all reports."""
    cfg_file = dict(ctx.obj["config"].get("roster", ctx.obj["config"]))
    known = {f for f in RosterConfig.__dataclass_fields__}
    fields = {k: v for k, v in cfg_file.items() if k in known}
    for key in ("translator_targets", "heatmap_weathers"):
        if key in fields:
            fields[key] = tuple(fields[key])
    fields.setdefault("seed", ctx.obj["seed"])
    cfg = RosterConfig(**fields)
    out = _out(ctx)
    reports = run_roster(cfg, out, progress=lambda m: click.echo(m))
    for name, rep in reports.items():
        click.echo(f"{name}: overall online {rep.online_overall:.2f}%")
    click.echo(f"reports written to {out}")


if __name__ == "__main__":
    main()
