"""Minimal deterministic differentiable layers on float32 numpy arrays.

Layers are functional: ``forward`` returns ``(output, cache)`` and
``backward(cache, dout)`` returns the input gradient while accumulating
parameter gradients in place.  Because caches live outside the layer, the
same layer object can be applied several times per step (shared weights)
and backpropagated through each application independently.

All arrays are float32, batch-first.  Images use NCHW internally.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, UsageError

F32 = np.float32


def check_finite(x: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values in {what}")
    return x


class Param:
    """A trainable array with an accumulated gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=F32)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


class Layer:
    params: list[Param] = []

    def forward(self, x: np.ndarray):
        raise NotImplementedError

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def kaiming_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(F32)


class Conv3x3(Layer):
    """3x3 convolution, stride 1, zero padding 1 (same spatial size)."""

    def __init__(self, in_ch: int, out_ch: int, rng: np.random.Generator, name: str = "conv"):
        self.in_ch = in_ch
        self.out_ch = out_ch
        fan_in = in_ch * 9
        self.weight = Param(f"{name}.weight", kaiming_uniform(rng, (out_ch, in_ch, 3, 3), fan_in))
        self.bias = Param(f"{name}.bias", np.zeros(out_ch, dtype=F32))
        self.params = [self.weight, self.bias]

    def forward(self, x: np.ndarray):
        b, c, h, w = x.shape
        if c != self.in_ch:
            raise UsageError(f"conv expects {self.in_ch} channels, got {c}")
        xp = np.zeros((b, c, h + 2, w + 2), dtype=x.dtype)
        xp[:, :, 1:-1, 1:-1] = x
        # (b, c, h, w, 3, 3) patches -> (b*h*w, c*9)
        win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * h * w, c * 9)
        wmat = self.weight.value.reshape(self.out_ch, c * 9)
        out = cols @ wmat.T + self.bias.value
        out = out.reshape(b, h, w, self.out_ch).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(out), (cols, x.shape)

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        cols, xshape = cache
        b, c, h, w = xshape
        dflat = dout.transpose(0, 2, 3, 1).reshape(b * h * w, self.out_ch)
        self.weight.grad += (dflat.T @ cols).reshape(self.weight.value.shape)
        self.bias.grad += dflat.sum(axis=0)
        dcols = dflat @ self.weight.value.reshape(self.out_ch, c * 9)
        dcols = dcols.reshape(b, h, w, c, 3, 3)
        dxp = np.zeros((b, c, h + 2, w + 2), dtype=dout.dtype)
        for i in range(3):
            for j in range(3):
                dxp[:, :, i : i + h, j : j + w] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, 1:-1, 1:-1]


class MaxPool2x2(Layer):
    def forward(self, x: np.ndarray):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise UsageError(f"maxpool2x2 needs even spatial dims, got {h}x{w}")
        xr = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
        xr = xr.reshape(b, c, h // 2, w // 2, 4)
        idx = xr.argmax(axis=-1)
        out = np.take_along_axis(xr, idx[..., None], axis=-1)[..., 0]
        return np.ascontiguousarray(out), (idx, x.shape)

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        idx, xshape = cache
        b, c, h, w = xshape
        dxr = np.zeros((b, c, h // 2, w // 2, 4), dtype=dout.dtype)
        np.put_along_axis(dxr, idx[..., None], dout[..., None], axis=-1)
        dx = dxr.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return np.ascontiguousarray(dx.reshape(b, c, h, w))


class ReLU(Layer):
    def forward(self, x: np.ndarray):
        mask = x > 0
        return x * mask, mask

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        return dout * cache


class Tanh(Layer):
    def forward(self, x: np.ndarray):
        y = np.tanh(x)
        return y, y

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        return dout * (1.0 - cache * cache)


class AdaptiveAvgPool4(Layer):
    """Average-pool any (b,c,h,w) with h,w divisible by 4 down to (b,c,4,4)."""

    def forward(self, x: np.ndarray):
        b, c, h, w = x.shape
        if h % 4 or w % 4:
            raise UsageError(f"adaptive_avgpool(4x4) needs dims divisible by 4, got {h}x{w}")
        kh, kw = h // 4, w // 4
        xr = x.reshape(b, c, 4, kh, 4, kw)
        out = xr.mean(axis=(3, 5), dtype=x.dtype)
        return out, (x.shape, kh, kw)

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        xshape, kh, kw = cache
        b, c, h, w = xshape
        scale = dout.dtype.type(1.0 / (kh * kw))
        dx = np.broadcast_to(
            (dout * scale)[:, :, :, None, :, None], (b, c, 4, kh, 4, kw)
        )
        return np.ascontiguousarray(dx.reshape(b, c, h, w))


class Flatten(Layer):
    def forward(self, x: np.ndarray):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(cache)


class Linear(Layer):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str = "linear"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Param(f"{name}.weight", kaiming_uniform(rng, (out_dim, in_dim), in_dim))
        self.bias = Param(f"{name}.bias", np.zeros(out_dim, dtype=F32))
        self.params = [self.weight, self.bias]

    def forward(self, x: np.ndarray):
        if x.shape[1] != self.in_dim:
            raise UsageError(f"linear expects dim {self.in_dim}, got {x.shape[1]}")
        return x @ self.weight.value.T + self.bias.value, x

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        x = cache
        self.weight.grad += dout.T @ x
        self.bias.grad += dout.sum(axis=0)
        return dout @ self.weight.value


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = layers
        self.params = [p for layer in layers for p in layer.params]

    def forward(self, x: np.ndarray):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, caches

    def backward(self, caches, dout: np.ndarray) -> np.ndarray:
        for layer, c in zip(reversed(self.layers), reversed(caches)):
            dout = layer.backward(c, dout)
        return dout
