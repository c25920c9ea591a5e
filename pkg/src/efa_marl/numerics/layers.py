"""Neural layers: affine maps, GRU cell, softmax family, attention aggregation.

Inputs are row-batched: a single sample is a 1xD row, a batch is BxD.
All layers participate in the reverse-mode tape of :mod:`.tensor`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SeededRng
from .tensor import (
    DimensionError,
    Parameter,
    Tensor,
    _make,
    as_tensor,
    check_finite,
    concat,
    div,
    exp,
    log,
    matmul,
    matmul_t,
    relu,
    tsum,
)

# additive mask for "attend over j != i"; finite so tensors stay finite,
# large enough that exp underflows to exactly 0.0
_MASK = -1.0e30


def init_uniform(rng: SeededRng, n_out: int, n_in: int) -> Parameter:
    """Weight matrix drawn uniform(-1/sqrt(n_in), 1/sqrt(n_in))."""
    bound = 1.0 / np.sqrt(n_in)
    return Parameter(rng.uniform(-bound, bound, size=(n_out, n_in)))


def init_zeros(n: int) -> Parameter:
    return Parameter(np.zeros((1, n)))


def linear(x, w: Tensor, b: Tensor) -> Tensor:
    """y = x W^T + b for row-batched x (BxN_in), w (N_out x N_in), b (1 x N_out)."""
    x = as_tensor(x)
    if x.shape[1] != w.shape[1]:
        raise DimensionError(
            f"linear: input has {x.shape[1]} features but weight expects "
            f"{w.shape[1]} (x {x.shape}, W {w.shape})"
        )
    if b.shape != (1, w.shape[0]):
        raise DimensionError(f"linear: bias {b.shape} does not match weight rows {w.shape[0]}")
    return check_finite(matmul_t(x, w) + b, "linear")


@dataclass
class GruParams:
    """Gates: z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
    cand = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*cand."""

    w_z: Parameter
    u_z: Parameter
    b_z: Parameter
    w_r: Parameter
    u_r: Parameter
    b_r: Parameter
    w_h: Parameter
    u_h: Parameter
    b_h: Parameter

    @classmethod
    def create(cls, d_in: int, d_h: int, rng: SeededRng) -> "GruParams":
        return cls(
            w_z=init_uniform(rng, d_h, d_in),
            u_z=init_uniform(rng, d_h, d_h),
            b_z=init_zeros(d_h),
            w_r=init_uniform(rng, d_h, d_in),
            u_r=init_uniform(rng, d_h, d_h),
            b_r=init_zeros(d_h),
            w_h=init_uniform(rng, d_h, d_in),
            u_h=init_uniform(rng, d_h, d_h),
            b_h=init_zeros(d_h),
        )

    def parameters(self) -> list[Parameter]:
        return [self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r,
                self.w_h, self.u_h, self.b_h]


def gru_step(x, h_prev, p: GruParams) -> Tensor:
    """One fused GRU node with a hand-derived adjoint (certified by grad_check).

    z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
    cand = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*cand.
    """
    x, h_prev = as_tensor(x), as_tensor(h_prev)
    if x.shape[1] != p.w_z.shape[1] or h_prev.shape[1] != p.u_z.shape[1]:
        raise DimensionError(
            f"gru_step: x {x.shape} / h {h_prev.shape} do not match "
            f"Wz {p.w_z.shape} / Uz {p.u_z.shape}"
        )
    xd, hd = x.data, h_prev.data
    z = _sigmoid_np(xd @ p.w_z.data.T + hd @ p.u_z.data.T + p.b_z.data)
    r = _sigmoid_np(xd @ p.w_r.data.T + hd @ p.u_r.data.T + p.b_r.data)
    rh = r * hd
    cand = np.tanh(xd @ p.w_h.data.T + rh @ p.u_h.data.T + p.b_h.data)
    out_data = (1.0 - z) * hd + z * cand

    def vjp(g):
        d_cand = g * z * (1.0 - cand * cand)  # through tanh
        d_rh = d_cand @ p.u_h.data
        dr_pre = d_rh * hd * r * (1.0 - r)  # d(pre-activation of r)
        dz_pre = g * (cand - hd) * z * (1.0 - z)
        if p.w_h.requires_grad:
            p.w_h._accumulate(d_cand.T @ xd)
            p.u_h._accumulate(d_cand.T @ rh)
            p.b_h._accumulate(d_cand.sum(axis=0, keepdims=True))
            p.w_r._accumulate(dr_pre.T @ xd)
            p.u_r._accumulate(dr_pre.T @ hd)
            p.b_r._accumulate(dr_pre.sum(axis=0, keepdims=True))
            p.w_z._accumulate(dz_pre.T @ xd)
            p.u_z._accumulate(dz_pre.T @ hd)
            p.b_z._accumulate(dz_pre.sum(axis=0, keepdims=True))
        if x.requires_grad:
            x._accumulate(d_cand @ p.w_h.data + dr_pre @ p.w_r.data + dz_pre @ p.w_z.data)
        if h_prev.requires_grad:
            h_prev._accumulate(
                g * (1.0 - z) + d_rh * r
                + dr_pre @ p.u_r.data + dz_pre @ p.u_z.data)

    out = _make(out_data, (x, h_prev, *p.parameters()), vjp)
    return check_finite(out, "gru_step")


def _sigmoid_np(v: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-v))


def softmax(v) -> Tensor:
    """Row-wise softmax, stabilized by subtracting the (detached) row max."""
    v = as_tensor(v)
    if v.shape[1] < 1 or v.data.size == 0:
        raise ValueError("softmax: empty input")
    shift = v - Tensor(v.data.max(axis=1, keepdims=True))
    e = exp(shift)
    out = div(e, tsum(e, axis=1))
    return check_finite(out, "softmax")


def log_softmax(v) -> Tensor:
    """Row-wise log softmax via the logsumexp identity (stable for large logits)."""
    v = as_tensor(v)
    shift_const = Tensor(v.data.max(axis=1, keepdims=True))
    shifted = v - shift_const
    lse = log(tsum(exp(shifted), axis=1))
    return check_finite(shifted - lse, "log_softmax")


def gumbel_softmax(logits, beta: float, rng: SeededRng) -> tuple[Tensor, Tensor]:
    """Sample relaxed and hard one-hot category weights for a 1xN logit row.

    soft_i = exp((g_i + log pi_i) * beta) / sum_j exp((g_j + log pi_j) * beta)
    with g_i standard Gumbel noise; computed in logit space, where the
    log-normalizer of pi cancels. The hard output is one-hot at the argmax of
    soft and behaves as soft under differentiation (straight-through).
    """
    logits = as_tensor(logits)
    if beta <= 0.0:
        raise ValueError(f"gumbel_softmax: beta must be positive, got {beta}")
    if not np.all(np.isfinite(logits.data)):
        raise ValueError("gumbel_softmax: logits must be finite")
    if logits.shape[0] != 1:
        raise DimensionError(f"gumbel_softmax expects a 1xN logit row, got {logits.shape}")
    noise = Tensor(rng.gumbel(size=logits.shape))
    soft = softmax((logits + noise) * beta)
    onehot = np.zeros_like(soft.data)
    onehot[0, int(np.argmax(soft.data))] = 1.0
    hard = soft + Tensor(onehot - soft.data)  # forward hard, backward soft
    return soft, hard


def exclusion_mask(n: int, block: int | None = None) -> np.ndarray:
    """Additive mask hiding the diagonal and, when `block` is given, every
    entry outside the (n/block) diagonal blocks. Masked entries contribute
    exactly zero attention weight (their exponentials underflow)."""
    hide = np.eye(n, dtype=bool)
    if block is not None:
        groups = np.arange(n) // block
        hide |= groups[:, None] != groups[None, :]
    return np.where(hide, _MASK, 0.0)


def attention_coefficients(h, w: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product attention rows over the other agents.

    a_ij = softmax over j != i of (h_i W)(h_j W)^T / sqrt(d_k); the diagonal
    is exactly zero and every row sums to one. A custom additive mask may
    widen the exclusion (block-diagonal batching).
    """
    h = as_tensor(h)
    n = h.shape[0]
    if n < 2:
        raise ValueError(f"attention_coefficients: need at least 2 rows, got {n}")
    d_k = w.shape[1]
    proj = matmul(h, w)
    scores = matmul_t(proj, proj) * (1.0 / np.sqrt(d_k))
    if mask is None:
        mask = exclusion_mask(n)
    return check_finite(softmax(scores + Tensor(mask)), "attention_coefficients")


@dataclass
class AttentionHead:
    """One head: w_score feeds the coefficients, w_value (square) the messages."""

    w_score: Parameter
    w_value: Parameter

    @classmethod
    def create(cls, d: int, d_k: int, rng: SeededRng) -> "AttentionHead":
        return cls(w_score=init_uniform(rng, d, d_k), w_value=init_uniform(rng, d, d))

    def parameters(self) -> list[Parameter]:
        return [self.w_score, self.w_value]


def multi_head_aggregate(h, heads: list[AttentionHead], mask: np.ndarray | None = None) -> Tensor:
    """Per head: out_i = ReLU(sum_{j != i} a_ij (h_j W_v) + h_i); heads concatenated.

    The residual fixes each head's output width to the input width d.
    """
    h = as_tensor(h)
    if not heads:
        raise ValueError("multi_head_aggregate: need at least one head")
    d = h.shape[1]
    outs = []
    for head in heads:
        if head.w_value.shape != (d, d):
            raise DimensionError(
                f"multi_head_aggregate: value weight {head.w_value.shape} "
                f"must be square {d}x{d}"
            )
        if head.w_score.shape[0] != d:
            raise DimensionError(
                f"multi_head_aggregate: score weight {head.w_score.shape} "
                f"does not accept width-{d} rows"
            )
        coeff = attention_coefficients(h, head.w_score, mask)
        messages = matmul(coeff, matmul(h, head.w_value))
        outs.append(relu(messages + h))
    return check_finite(concat(outs, axis=1), "multi_head_aggregate")
