"""Steering model: 4-unit convolutional trunk, three projection layers, a
shared fully connected control head applied as 4 auxiliary heads, and
learned softmax weights combining the heads.

Head i consumes the output of trunk unit i (heads 1-3 through a projection,
head 4 through a flatten).  The model output is sum_i alpha_i * O_i with
alpha = softmax(logits), and the training loss is the alpha-weighted sum of
per-head MSEs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, UsageError
from .tensornet import (
    AdaptiveAvgPool4,
    Conv3x3,
    Flatten,
    Linear,
    MaxPool2x2,
    Param,
    ReLU,
    Sequential,
    Tanh,
    check_finite,
    load_params,
    save_params,
)

F32 = np.float32

DEFAULT_CHANNELS = (16, 24, 32, 50)
DEFAULT_CONTROL = (64, 16)
N_HEADS = 4
ARCH_VERSION = 1


@dataclass(frozen=True)
class AuxOutput:
    per_head: np.ndarray  # (4,) steering per auxiliary head
    alphas: np.ndarray  # (4,) softmax weights, sum 1
    combined: float


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def softmax_backward(alpha: np.ndarray, dalpha: np.ndarray) -> np.ndarray:
    inner = np.dot(alpha, dalpha)
    return alpha * (dalpha - inner)


class ModelBundle:
    """Trunk + projections + shared control + auxiliary-weight logits."""

    def __init__(self, seed: int = 0, img_size: int = 64,
                 channels: tuple[int, ...] = DEFAULT_CHANNELS,
                 control_dims: tuple[int, ...] = DEFAULT_CONTROL):
        if img_size % 16:
            raise ConfigError("img_size must be divisible by 16")
        self.img_size = img_size
        self.channels = tuple(channels)
        self.control_dims = tuple(control_dims)
        rng = np.random.Generator(np.random.PCG64(seed))
        self.seed = seed

        self.units: list[Sequential] = []
        cin = 3
        for i, c in enumerate(channels, start=1):
            self.units.append(Sequential([
                Conv3x3(cin, c, rng, name=f"unit{i}.conv"),
                MaxPool2x2(),
                ReLU(),
            ]))
            cin = c
        self.feature_dim = (img_size // 16) ** 2 * channels[3]

        self.projections: list[Sequential] = []
        for i, c in enumerate(channels[:3], start=1):
            self.projections.append(Sequential([
                AdaptiveAvgPool4(),
                Flatten(),
                Linear(16 * c, self.feature_dim, rng, name=f"p{i}.linear"),
                ReLU(),
            ]))
        self.flatten4 = Flatten()

        layers: list = []
        d = self.feature_dim
        for j, h in enumerate(control_dims, start=1):
            layers += [Linear(d, h, rng, name=f"control.fc{j}"), ReLU()]
            d = h
        layers += [Linear(d, 1, rng, name=f"control.fc{len(control_dims) + 1}"), Tanh()]
        self.control = Sequential(layers)

        self.aux_logits = Param("aux_logits", np.zeros(N_HEADS, dtype=F32))

        self.params: list[Param] = []
        for group in self.units + self.projections + [self.control]:
            self.params += group.params
        self.params.append(self.aux_logits)

    # -- forward / backward -------------------------------------------------

    def alphas(self) -> np.ndarray:
        return softmax(self.aux_logits.value)

    def cast(self, dtype) -> "ModelBundle":
        """Convert all parameters in place (float64 for verification runs)."""
        for p in self.params:
            p.value = p.value.astype(dtype)
            p.grad = p.grad.astype(dtype)
        return self

    def forward_batch(self, x: np.ndarray):
        """x: (b, 3, s, s) float32.  Returns (O (b,4), alpha (4,), tape)."""
        if x.ndim != 4 or x.shape[1] != 3 or x.shape[2] != self.img_size:
            raise UsageError(f"expected (b,3,{self.img_size},{self.img_size}), got {x.shape}")
        unit_caches, feat_caches, head_caches = [], [], []
        h = x
        hs = []
        for unit in self.units:
            h, c = unit.forward(h)
            unit_caches.append(c)
            hs.append(h)
        outs = []
        for i in range(N_HEADS):
            if i < 3:
                f, fc = self.projections[i].forward(hs[i])
            else:
                f, fc = self.flatten4.forward(hs[3])
            feat_caches.append(fc)
            o, oc = self.control.forward(f)
            head_caches.append(oc)
            outs.append(o[:, 0])
        O = check_finite(np.stack(outs, axis=1), "head outputs")
        alpha = self.alphas()
        tape = (unit_caches, feat_caches, head_caches, x.shape)
        return O, alpha, tape

    def backward_batch(self, tape, dO: np.ndarray, dalpha: np.ndarray | None = None) -> None:
        """Accumulate parameter gradients for upstream gradients dO (b,4)
        on the head outputs and dalpha (4,) on the softmax weights."""
        unit_caches, feat_caches, head_caches, xshape = tape
        dh = [None] * N_HEADS  # gradients w.r.t. unit outputs
        for i in range(N_HEADS):
            df = self.control.backward(head_caches[i], np.ascontiguousarray(dO[:, i : i + 1]))
            if i < 3:
                g = self.projections[i].backward(feat_caches[i], df)
            else:
                g = self.flatten4.backward(feat_caches[i], df)
            dh[i] = g
        grad = dh[3]
        for i in (3, 2, 1, 0):
            if i < 3:
                grad = grad + dh[i] if grad is not None else dh[i]
            grad = self.units[i].backward(unit_caches[i], grad)
        if dalpha is not None:
            alpha = self.alphas()
            self.aux_logits.grad += softmax_backward(alpha, dalpha)

    # -- inference ------------------------------------------------------------

    def predict_batch(self, images_hwc: np.ndarray) -> np.ndarray:
        """Combined steering for a batch of HWC images; returns (b,)."""
        x = np.ascontiguousarray(images_hwc.transpose(0, 3, 1, 2), dtype=F32)
        O, alpha, _ = self.forward_batch(x)
        return O @ alpha

    def predict(self, image: np.ndarray) -> AuxOutput:
        x = np.ascontiguousarray(image[None].transpose(0, 3, 1, 2), dtype=F32)
        O, alpha, _ = self.forward_batch(x)
        combined = float(O[0] @ alpha)
        return AuxOutput(O[0].copy(), alpha.copy(), combined)

    def unit1_activations(self, image: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(image[None].transpose(0, 3, 1, 2), dtype=F32)
        h, _ = self.units[0].forward(x)
        return h[0]

    # -- persistence ------------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {}
        for p in self.params:
            if p.name in out:
                raise UsageError(f"duplicate parameter name {p.name}")
            out[p.name] = p.value
        return out

    def save(self, path: str | Path) -> None:
        path = Path(path)
        save_params(path, self.state_dict())
        sidecar = {
            "arch_version": ARCH_VERSION,
            "img_size": self.img_size,
            "channels": list(self.channels),
            "control_dims": list(self.control_dims),
            "alpha_logits": [float(v) for v in self.aux_logits.value],
            "seed": self.seed,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ModelBundle":
        path = Path(path)
        try:
            sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        except OSError as exc:
            raise ConfigError(f"missing model sidecar for {path}: {exc}") from exc
        if sidecar.get("arch_version") != ARCH_VERSION:
            raise ConfigError(f"unsupported model architecture version in {path}")
        model = cls(seed=sidecar.get("seed", 0), img_size=sidecar["img_size"],
                    channels=tuple(sidecar["channels"]),
                    control_dims=tuple(sidecar["control_dims"]))
        tensors = load_params(path)
        for p in model.params:
            if p.name not in tensors:
                raise ConfigError(f"model file {path} missing tensor {p.name}")
            if tensors[p.name].shape != p.value.shape:
                raise ConfigError(f"shape mismatch for {p.name} in {path}")
            p.value[...] = tensors[p.name]
        return model


# -- loss ---------------------------------------------------------------------


def weighted_loss(O: np.ndarray, alpha: np.ndarray, targets: np.ndarray):
    """(L, per-head losses): L_i = MSE of head i, L = sum_i alpha_i L_i."""
    if O.ndim != 2 or O.shape[0] == 0:
        raise UsageError("empty batch")
    diff = O - np.asarray(targets, dtype=O.dtype)[:, None]
    Li = np.mean(diff * diff, axis=0, dtype=O.dtype)
    return float(alpha @ Li), Li


def weighted_loss_grads(O: np.ndarray, alpha: np.ndarray, targets: np.ndarray):
    """Gradients of the weighted loss w.r.t. head outputs and alphas."""
    n = O.shape[0]
    diff = O - np.asarray(targets, dtype=O.dtype)[:, None]
    dO = alpha[None, :] * (O.dtype.type(2.0 / n) * diff)
    Li = np.mean(diff * diff, axis=0, dtype=O.dtype)
    return dO, Li  # dL/dalpha_i = L_i


# -- pruning --------------------------------------------------------------------


class PrunedModel:
    """Inference-only model keeping the heads whose alpha passed threshold."""

    def __init__(self, model: ModelBundle, retained: list[int]):
        if not retained:
            raise UsageError("pruning would remove every head")
        self.model = model
        self.retained = sorted(retained)
        full = model.alphas()
        kept = full[self.retained]
        self.alphas = (kept / kept.sum()).astype(F32)
        self.max_unit = self.retained[-1] + 1  # trunk units actually evaluated

    def predict_batch(self, images_hwc: np.ndarray) -> np.ndarray:
        m = self.model
        x = np.ascontiguousarray(images_hwc.transpose(0, 3, 1, 2), dtype=F32)
        h = x
        hs = []
        for unit in m.units[: self.max_unit]:
            h, _ = unit.forward(h)
            hs.append(h)
        outs = []
        for i in self.retained:
            if i < 3:
                f, _ = m.projections[i].forward(hs[i])
            else:
                f, _ = m.flatten4.forward(hs[3])
            o, _ = m.control.forward(f)
            outs.append(o[:, 0])
        O = np.stack(outs, axis=1)
        return O @ self.alphas

    def predict(self, image: np.ndarray) -> float:
        return float(self.predict_batch(image[None])[0])


def prune_by_alpha(model: ModelBundle, threshold: float) -> PrunedModel:
    """Drop heads with alpha below threshold; renormalize the rest."""
    alpha = model.alphas()
    retained = [i for i in range(N_HEADS) if alpha[i] >= threshold]
    if not retained:
        raise UsageError(f"all alphas below threshold {threshold}")
    return PrunedModel(model, retained)


def prune_to_dominant(model: ModelBundle) -> PrunedModel:
    """Keep only the head holding the largest learned weight."""
    return PrunedModel(model, [int(np.argmax(model.alphas()))])


# -- heatmap ----------------------------------------------------------------------


def _upsample_bilinear(a: np.ndarray, size: int) -> np.ndarray:
    h, w = a.shape
    if (h, w) == (size, size):
        return a.astype(F32)
    ys = (np.arange(size) + 0.5) * h / size - 0.5
    xs = (np.arange(size) + 0.5) * w / size - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None].astype(F32)
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :].astype(F32)
    top = a[np.ix_(y0, x0)] * (1 - fx) + a[np.ix_(y0, x1)] * fx
    bot = a[np.ix_(y1, x0)] * (1 - fx) + a[np.ix_(y1, x1)] * fx
    return (top * (1 - fy) + bot * fy).astype(F32)


def activation_heatmap(model: ModelBundle, image: np.ndarray) -> np.ndarray:
    """Channel-sum of first-unit activations as a normalized RGB image."""
    act = model.unit1_activations(image)  # (c, s/2, s/2)
    heat = act.sum(axis=0, dtype=F32)
    heat = _upsample_bilinear(heat, model.img_size)
    lo, hi = float(heat.min()), float(heat.max())
    if hi - lo > 1e-12:
        heat = (heat - lo) / (hi - lo)
    else:
        heat = np.zeros_like(heat)
    return np.repeat(heat[:, :, None], 3, axis=2).astype(F32)
