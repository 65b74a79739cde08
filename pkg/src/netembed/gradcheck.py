"""Central finite-difference check of reverse-mode gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numeric_grad(f: Callable[[], Tensor], p: Tensor, step: float = 1e-5) -> np.ndarray:
    out = np.zeros_like(p.data)
    for i in np.ndindex(p.data.shape):
        orig = p.data[i]
        p.data[i] = orig + step
        up = f().item()
        p.data[i] = orig - step
        down = f().item()
        p.data[i] = orig
        out[i] = (up - down) / (2 * step)
    return out


def finite_diff_check(f: Callable[[], Tensor], params: Sequence[Tensor], step: float = 1e-5) -> float:
    """Max over parameter entries of |analytic - numeric| / max(1, |numeric|).

    ``f`` rebuilds the loss from the current parameter values on each call and
    must be deterministic.
    """
    for p in params:
        p.grad = None
    grads = f().backward()
    worst = 0.0
    for p in params:
        analytic = grads.get(p, np.zeros_like(p.data))
        numeric = numeric_grad(f, p, step)
        err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
        if err.size:
            worst = max(worst, float(err.max()))
    for p in params:
        p.grad = None
    return worst
