"""Dense array algebra, neural layers, reverse-mode gradients, RMSProp, and
the finite-difference oracle that certifies every gradient in the repository."""

from .gradcheck import grad_check
from .layers import (
    AttentionHead,
    GruParams,
    attention_coefficients,
    gru_step,
    gumbel_softmax,
    init_uniform,
    init_zeros,
    linear,
    log_softmax,
    multi_head_aggregate,
    softmax,
)
from .optim import rmsprop_step
from .rng import STREAMS, SeededRng, named_streams
from .tensor import (
    DimensionError,
    Parameter,
    Tensor,
    as_tensor,
    backward,
    concat,
    exp,
    log,
    matmul,
    matmul_t,
    mul,
    no_grad,
    relu,
    reshape,
    rows,
    sigmoid,
    square,
    take_rows,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "AttentionHead",
    "DimensionError",
    "GruParams",
    "Parameter",
    "STREAMS",
    "SeededRng",
    "Tensor",
    "as_tensor",
    "attention_coefficients",
    "backward",
    "concat",
    "exp",
    "grad_check",
    "gru_step",
    "gumbel_softmax",
    "init_uniform",
    "init_zeros",
    "linear",
    "log",
    "log_softmax",
    "matmul",
    "matmul_t",
    "mul",
    "multi_head_aggregate",
    "named_streams",
    "no_grad",
    "relu",
    "reshape",
    "rmsprop_step",
    "rows",
    "sigmoid",
    "softmax",
    "square",
    "take_rows",
    "tanh",
    "transpose",
    "tsum",
]
