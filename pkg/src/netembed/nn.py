"""Small building blocks shared by the models: initialisers and dense layers."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, matmul, parameter


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def dense_params(rng: np.random.Generator, fan_in: int, fan_out: int, prefix: str) -> dict[str, Tensor]:
    """Weight ``(fan_in, fan_out)`` with Xavier-uniform entries and a zero bias."""
    return {
        f"{prefix}.W": parameter(xavier_uniform(rng, fan_in, fan_out), name=f"{prefix}.W"),
        f"{prefix}.b": parameter(np.zeros(fan_out), name=f"{prefix}.b"),
    }


def dense(params: dict[str, Tensor], prefix: str, x) -> Tensor:
    """Affine map ``x @ W + b``; rows of ``x`` are samples."""
    return matmul(x, params[f"{prefix}.W"]) + params[f"{prefix}.b"]
