"""First-order optimizers over lists of parameter tensors."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .tensor import Tensor

KINDS = ("sgd", "adam", "rmsprop")


class MissingGradientError(KeyError):
    pass


class Optimizer:
    """SGD, Adam or RMSProp applied in place to ``params``.

    State buffers are allocated per parameter at construction, so a step
    never depends on anything but the gradients, the buffers and the step
    count.
    """

    def __init__(self, params: Sequence[Tensor], kind: str = "adam", lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8, rho: float = 0.9):
        if kind not in KINDS:
            raise ValueError(f"unknown optimizer kind {kind!r}; expected one of {KINDS}")
        self.params = list(params)
        self.kind = kind
        self.lr = lr
        self.beta1, self.beta2, self.eps, self.rho = beta1, beta2, eps, rho
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self, grads: Mapping[Tensor, np.ndarray] | None = None) -> None:
        """Apply one update.  Without ``grads`` each parameter's ``.grad`` is used."""
        resolved = []
        for i, p in enumerate(self.params):
            g = p.grad if grads is None else grads.get(p, p.grad)
            if g is None:
                raise MissingGradientError(f"no gradient for parameter {p.name or i!r}")
            resolved.append(g)
        self.t += 1
        for p, g, m, v in zip(self.params, resolved, self.m, self.v):
            if self.kind == "sgd":
                p.data -= self.lr * g
            elif self.kind == "adam":
                m *= self.beta1
                m += (1 - self.beta1) * g
                v *= self.beta2
                v += (1 - self.beta2) * g * g
                mhat = m / (1 - self.beta1 ** self.t)
                vhat = v / (1 - self.beta2 ** self.t)
                p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
            else:
                v *= self.rho
                v += (1 - self.rho) * g * g
                p.data -= self.lr * g / (np.sqrt(v) + self.eps)
