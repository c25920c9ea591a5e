"""Finite-difference certification of reverse-mode gradients.

This is the independent oracle for every gradient in the repository: it never
trusts the tape, it re-evaluates the target function with per-coordinate
central differences and reports the worst relative disagreement.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .tensor import Parameter, Tensor, backward

_FLOOR = 1e-8


def grad_check(f: Callable[[], Tensor], params: Sequence[Parameter], eps: float = 1e-4) -> float:
    """Worst relative error between tape gradients of f() and central differences.

    f must rebuild its graph from the current parameter values on every call
    and hold any randomness fixed. Relative error uses the denominator
    max(|analytic|, |numeric|, 1e-8). Grads are zeroed before and after.
    """
    if eps <= 0.0:
        raise ValueError(f"grad_check: eps must be positive, got {eps}")
    for p in params:
        p.zero_grad()
    backward(f())
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, a_grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        a_flat = a_grad.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            f_plus = f().item()
            flat[i] = saved - eps
            f_minus = f().item()
            flat[i] = saved
            numeric = (f_plus - f_minus) / (2.0 * eps)
            denom = max(abs(a_flat[i]), abs(numeric), _FLOOR)
            worst = max(worst, abs(a_flat[i] - numeric) / denom)

    for p in params:
        p.zero_grad()
    return worst
