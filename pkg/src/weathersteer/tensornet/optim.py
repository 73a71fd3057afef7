"""Adam optimizer over Param lists, float32 and deterministic."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from .layers import F32, Param


class Adam:
    def __init__(self, params: list[Param], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = F32(lr)
        self.beta1 = F32(beta1)
        self.beta2 = F32(beta2)
        self.eps = F32(eps)
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise NumericError(f"non-finite gradient for {p.name}; step refused")
        self.t += 1
        bc1 = F32(1.0) - self.beta1 ** self.t
        bc2 = F32(1.0) - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            m *= self.beta1
            m += (F32(1.0) - self.beta1) * p.grad
            v *= self.beta2
            v += (F32(1.0) - self.beta2) * (p.grad * p.grad)
            mhat = m / bc1
            vhat = v / bc2
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
