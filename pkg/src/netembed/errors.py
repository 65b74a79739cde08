"""Exceptions shared across models."""
from __future__ import annotations

from .tensor import NumericalError


class DivergenceError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, model: str, step: int, detail: str):
        self.model, self.step, self.detail = model, step, detail
        super().__init__(f"{model}: training diverged at step {step}: {detail}")


class DisconnectedNodeError(ValueError):
    """An out-of-sample node has no links to embed from."""
