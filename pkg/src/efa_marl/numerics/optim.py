"""RMSProp parameter updates."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .tensor import Parameter

_EPS = 1e-8


def rmsprop_step(params: Iterable[Parameter], lr: float, decay: float) -> None:
    """s <- decay*s + (1-decay)*g^2; value <- value - lr*g/(sqrt(s)+1e-8); grads zeroed."""
    for p in params:
        g = p.grad
        p.step_state *= decay
        p.step_state += (1.0 - decay) * g * g
        p.data -= lr * g / (np.sqrt(p.step_state) + _EPS)
        if not np.all(np.isfinite(p.data)):
            raise FloatingPointError("rmsprop_step produced non-finite parameters")
        g.fill(0.0)
