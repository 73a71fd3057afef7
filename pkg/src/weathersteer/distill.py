"""Teacher training, teacher-to-student distillation, and substitution.

One training engine backs both entry points: teacher training is the
degenerate case (no soft loss, domain mix {0}), so distilling with
lambda_soft=0 and mix={0} reproduces teacher training bit for bit on the
same seed.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .domainxfer import Translator, translate
from .errors import ConfigError, UsageError
from .model import (
    DEFAULT_CHANNELS,
    DEFAULT_CONTROL,
    ModelBundle,
    weighted_loss_grads,
)
from .simworld.dataset import Dataset, Sample
from .simworld.weather import WeatherParams
from .tensornet import Adam

F32 = np.float32


@dataclass
class DistillConfig:
    lambda_soft: float = 0.5
    domain_mix: tuple[int, ...] = (0,)
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    entropy_tau: float = 0.0  # optional -tau*H(alpha) regularizer
    translate_labeled: bool = True
    img_size: int = 64
    channels: tuple[int, ...] = DEFAULT_CHANNELS
    control_dims: tuple[int, ...] = DEFAULT_CONTROL

    def __post_init__(self):
        if not (0.0 <= self.lambda_soft <= 1.0):
            raise ConfigError(f"lambda_soft {self.lambda_soft} outside [0,1]")
        if not self.domain_mix or 0 not in self.domain_mix:
            raise ConfigError("domain_mix must be nonempty and include weather 0")


@dataclass
class TrainLogRow:
    epoch: int
    L: float
    Li: tuple[float, float, float, float]
    alphas: tuple[float, float, float, float]
    hard: float
    soft: float
    seconds: float


@dataclass
class TrainLog:
    rows: list[TrainLogRow] = field(default_factory=list)

    CSV_HEADER = "epoch,L,L1,L2,L3,L4,a1,a2,a3,a4,hard,soft,seconds"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            vals = [r.epoch, r.L, *r.Li, *r.alphas, r.hard, r.soft, r.seconds]
            lines.append(",".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in vals))
        return "\n".join(lines) + "\n"


def _to_nchw(images: list[np.ndarray]) -> np.ndarray:
    return np.ascontiguousarray(np.stack(images).transpose(0, 3, 1, 2), dtype=F32)


def _soft_targets(teacher, samples: list[Sample], chunk: int = 256) -> np.ndarray:
    out = np.zeros(len(samples), dtype=F32)
    for i in range(0, len(samples), chunk):
        batch = np.stack([s.image for s in samples[i : i + chunk]])
        out[i : i + len(batch)] = teacher.predict_batch(batch)
    return out


def _train(pool: list[Sample], targets_hard: np.ndarray, has_hard: np.ndarray,
           targets_soft: np.ndarray, has_soft: np.ndarray,
           translators: dict[int, Translator] | None,
           weathers: dict[int, WeatherParams] | None,
           cfg: DistillConfig) -> tuple[ModelBundle, TrainLog]:
    model = ModelBundle(seed=cfg.seed, img_size=cfg.img_size,
                        channels=cfg.channels, control_dims=cfg.control_dims)
    opt = Adam(model.params, lr=cfg.lr)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    lam = F32(cfg.lambda_soft)
    one_minus = F32(1.0) - lam
    mix = tuple(cfg.domain_mix)
    n = len(pool)
    log = TrainLog()
    batch_counter = 0

    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        Li_sum = np.zeros(4, dtype=np.float64)
        L_sum = hard_sum = soft_sum = 0.0
        nb = 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            domain = mix[batch_counter % len(mix)]
            batch_counter += 1
            samples = [pool[i] for i in idx]
            if domain == 0:
                images = [s.image for s in samples]
            else:
                tr = translators[domain]
                images = []
                for s in samples:
                    hard_row = s.label is not None
                    if hard_row and not cfg.translate_labeled:
                        images.append(s.image)
                    else:
                        images.append(translate(tr, s, weathers))
            x = _to_nchw(images)
            O, alpha, tape = model.forward_batch(x)

            hard_rows = has_hard[idx]
            soft_rows = has_soft[idx]
            dO = np.zeros_like(O)
            dalpha = np.zeros(4, dtype=F32)
            Lh = np.zeros(4, dtype=F32)
            Ls = np.zeros(4, dtype=F32)
            if hard_rows.any():
                dOh, Lh = weighted_loss_grads(O[hard_rows], alpha, targets_hard[idx][hard_rows])
                dO[hard_rows] = one_minus * dOh
                dalpha += one_minus * Lh
            if soft_rows.any():
                dOs, Ls = weighted_loss_grads(O[soft_rows], alpha, targets_soft[idx][soft_rows])
                dO[soft_rows] = lam * dOs
                dalpha += lam * Ls
            if cfg.entropy_tau > 0.0:
                # d(-tau*H)/dalpha = tau * (log(alpha) + 1)
                dalpha += F32(cfg.entropy_tau) * (np.log(alpha) + F32(1.0))

            opt.zero_grad()
            model.backward_batch(tape, dO, dalpha)
            opt.step()

            hard_l = float(alpha @ Lh)
            soft_l = float(alpha @ Ls)
            L_sum += float(one_minus) * hard_l + float(lam) * soft_l
            hard_sum += hard_l
            soft_sum += soft_l
            Li_sum += (float(one_minus) * Lh + float(lam) * Ls).astype(np.float64)
            nb += 1

        alpha = model.alphas()
        log.rows.append(TrainLogRow(
            epoch=epoch,
            L=L_sum / nb,
            Li=tuple(Li_sum / nb),
            alphas=tuple(float(a) for a in alpha),
            hard=hard_sum / nb,
            soft=soft_sum / nb,
            seconds=time.perf_counter() - t0,
        ))
    return model, log


def train_teacher(labeled: Dataset, cfg: DistillConfig) -> tuple[ModelBundle, TrainLog]:
    """Supervised end-to-end training on the labeled weather-0 samples."""
    pool = [s for s in labeled.samples if s.label is not None]
    if not pool:
        raise UsageError("teacher training needs at least one labeled sample")
    cfg = DistillConfig(**{**cfg.__dict__, "lambda_soft": 0.0, "domain_mix": (0,)})
    targets = np.array([s.label for s in pool], dtype=F32)
    has_hard = np.ones(len(pool), dtype=bool)
    has_soft = np.zeros(len(pool), dtype=bool)
    return _train(pool, targets, has_hard, np.zeros(len(pool), dtype=F32),
                  has_soft, None, None, cfg)


def distill_student(teacher, full: Dataset, translators: dict[int, Translator] | None,
                    cfg: DistillConfig,
                    weathers: dict[int, WeatherParams] | None = None
                    ) -> tuple[ModelBundle, TrainLog]:
    """Train a fresh student on translated multi-domain batches with the
    (1-lambda)*hard + lambda*soft loss."""
    for d in cfg.domain_mix:
        if d != 0 and (translators is None or d not in translators):
            raise ConfigError(f"domain mix includes weather {d} but no translator covers it")
    if cfg.lambda_soft == 0.0:
        pool = [s for s in full.samples if s.label is not None]
        if not pool:
            warnings.warn("lambda_soft=0 with zero labeled samples: nothing to train on")
            model = ModelBundle(seed=cfg.seed, img_size=cfg.img_size,
                                channels=cfg.channels, control_dims=cfg.control_dims)
            return model, TrainLog()
    else:
        pool = list(full.samples)
    has_hard = np.array([s.label is not None for s in pool], dtype=bool)
    has_soft = ~has_hard
    if cfg.lambda_soft == 1.0 and not has_soft.any():
        warnings.warn("lambda_soft=1 with zero unlabeled samples: soft loss has no data")
    targets_hard = np.array([s.label if s.label is not None else 0.0 for s in pool], dtype=F32)
    if has_soft.any() and cfg.lambda_soft > 0.0:
        targets_soft = _soft_targets(teacher, pool)
    else:
        targets_soft = np.zeros(len(pool), dtype=F32)
    return _train(pool, targets_hard, has_hard, targets_soft, has_soft,
                  translators, weathers, cfg)


def substitute(model) -> "callable":
    """Closed-loop policy from a trained model (full or pruned)."""
    def policy(image: np.ndarray) -> float:
        return float(model.predict_batch(image[None])[0])
    return policy
