"""The finite-difference oracle and gradient soundness of the composites."""

import numpy as np
import pytest

from efa_marl.numerics import (
    AttentionHead,
    GruParams,
    Parameter,
    SeededRng,
    Tensor,
    grad_check,
    gru_step,
    init_uniform,
    init_zeros,
    linear,
    multi_head_aggregate,
    softmax,
    square,
    tsum,
)


def test_quadratic_scalar_is_nearly_exact():
    p = Parameter(np.array([[1.7]]))
    err = grad_check(lambda: tsum(square(p)), [p])
    assert err <= 1e-7


def test_gradient_of_independent_parameter_is_zero():
    used = Parameter(np.array([[2.0]]))
    unused = Parameter(np.array([[5.0]]))
    for p in (used, unused):
        p.zero_grad()
    loss = tsum(square(used))
    loss.backward()
    assert unused.grad[0, 0] == 0.0


def test_eps_must_be_positive():
    p = Parameter(np.ones((1, 1)))
    with pytest.raises(ValueError, match="eps"):
        grad_check(lambda: tsum(p), [p], eps=0.0)


@pytest.mark.parametrize("seed", range(10))
def test_gru_composite_within_tolerance(seed):
    rng = SeededRng(seed, "init")
    params = GruParams.create(3, 4, rng)
    x = Tensor(rng.uniform(-1, 1, (2, 3)))
    h0 = Tensor(np.zeros((2, 4)))

    def f():
        h = gru_step(x, h0, params)
        h = gru_step(x, h, params)
        return tsum(square(h))

    assert grad_check(f, params.parameters()) <= 1e-3


@pytest.mark.parametrize("seed", range(10))
def test_attention_softmax_linear_chain_within_tolerance(seed):
    rng = SeededRng(seed + 100, "init")
    h = Tensor(rng.uniform(-1, 1, (4, 5)))
    heads = [AttentionHead.create(5, 3, rng) for _ in range(2)]
    w_out = init_uniform(rng, 2, 10)
    b_out = init_zeros(2)
    params = [p for head in heads for p in head.parameters()] + [w_out, b_out]

    def f():
        agg = multi_head_aggregate(h, heads)
        return tsum(square(softmax(linear(agg, w_out, b_out))))

    assert grad_check(f, params) <= 1e-3


def test_grads_restored_to_zero_after_check():
    p = Parameter(np.array([[2.0, 3.0]]))
    grad_check(lambda: tsum(square(p)), [p])
    assert not p.grad.any()
