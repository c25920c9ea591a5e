"""Layer semantics against independent, hand-rolled oracles."""

import math

import numpy as np
import pytest

from efa_marl.numerics import (
    AttentionHead,
    DimensionError,
    GruParams,
    Parameter,
    SeededRng,
    Tensor,
    attention_coefficients,
    gru_step,
    gumbel_softmax,
    init_uniform,
    linear,
    log_softmax,
    multi_head_aggregate,
    softmax,
)

# softmax(1, 2, 3) computed independently with 50-digit decimal arithmetic
SOFTMAX_123 = (
    0.09003057317038045799802210148449179786793086491145,
    0.24472847105479765247295961834076279719930007483795,
    0.66524095577482188952901828017474540493276906025059,
)


def _param(values) -> Parameter:
    return Parameter(np.asarray(values, dtype=np.float64))


# -- linear ------------------------------------------------------------------


def test_linear_identity():
    out = linear(Tensor([[3.0, -1.0]]), _param(np.eye(2)), _param(np.zeros((1, 2))))
    assert np.array_equal(out.data, [[3.0, -1.0]])


def test_linear_zero_weights_returns_bias():
    out = linear(Tensor([[5.0, 7.0, 9.0]]), _param(np.zeros((2, 3))), _param([[1.0, 2.0]]))
    assert np.array_equal(out.data, [[1.0, 2.0]])


def test_linear_matches_triple_loop_oracle():
    rng = SeededRng(17, "init")
    w = init_uniform(rng, 4, 3)
    b = _param(rng.uniform(-1, 1, (1, 4)))
    x = rng.uniform(-1, 1, (2, 3))
    out = linear(Tensor(x), w, b)
    expected = np.zeros((2, 4))
    for r in range(2):
        for i in range(4):
            acc = b.data[0, i]
            for j in range(3):
                acc += w.data[i, j] * x[r, j]
            expected[r, i] = acc
    assert np.allclose(out.data, expected, atol=1e-12)


def test_linear_dimension_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(1, 3\).*\(4, 2\)"):
        linear(Tensor([[1.0, 2.0, 3.0]]), _param(np.zeros((4, 2))), _param(np.zeros((1, 4))))


# -- gru ---------------------------------------------------------------------


def _zero_gru(d_in, d_h) -> GruParams:
    zero = lambda r, c: _param(np.zeros((r, c)))
    return GruParams(
        w_z=zero(d_h, d_in), u_z=zero(d_h, d_h), b_z=zero(1, d_h),
        w_r=zero(d_h, d_in), u_r=zero(d_h, d_h), b_r=zero(1, d_h),
        w_h=zero(d_h, d_in), u_h=zero(d_h, d_h), b_h=zero(1, d_h),
    )


def test_gru_zero_params_halves_hidden():
    # z = sigmoid(0) = 0.5 and cand = tanh(0) = 0, so h' = 0.5 * h_prev
    h_prev = Tensor([[1.0, -2.0, 4.0]])
    out = gru_step(Tensor([[1.0, 1.0]]), h_prev, _zero_gru(2, 3))
    assert np.allclose(out.data, 0.5 * h_prev.data)


def test_gru_zero_hidden_zero_params_stays_zero():
    out = gru_step(Tensor([[1.0, 1.0]]), Tensor([[0.0, 0.0, 0.0]]), _zero_gru(2, 3))
    assert np.array_equal(out.data, np.zeros((1, 3)))


def test_gru_matches_scalar_oracle():
    rng = SeededRng(23, "init")
    params = GruParams.create(3, 2, rng)
    x = rng.uniform(-1, 1, (1, 3))
    h = rng.uniform(-1, 1, (1, 2))
    out = gru_step(Tensor(x), Tensor(h), params)

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    expected = np.zeros(2)
    for i in range(2):
        z = sig(sum(params.w_z.data[i, j] * x[0, j] for j in range(3))
                + sum(params.u_z.data[i, j] * h[0, j] for j in range(2))
                + params.b_z.data[0, i])
        r = sig(sum(params.w_r.data[i, j] * x[0, j] for j in range(3))
                + sum(params.u_r.data[i, j] * h[0, j] for j in range(2))
                + params.b_r.data[0, i])
        # note: reset gate multiplies h_prev elementwise before U_h
        cand = math.tanh(
            sum(params.w_h.data[i, j] * x[0, j] for j in range(3))
            + sum(params.u_h.data[i, j]
                  * (sig(sum(params.w_r.data[j, k] * x[0, k] for k in range(3))
                         + sum(params.u_r.data[j, k] * h[0, k] for k in range(2))
                         + params.b_r.data[0, j]) * h[0, j])
                  for j in range(2))
            + params.b_h.data[0, i])
        expected[i] = (1.0 - z) * h[0, i] + z * cand
    assert np.allclose(out.data[0], expected, atol=1e-12)


def test_gru_dimension_error():
    with pytest.raises(DimensionError):
        gru_step(Tensor([[1.0, 2.0, 3.0]]), Tensor([[0.0, 0.0]]), _zero_gru(2, 2))


# -- softmax -----------------------------------------------------------------


def test_softmax_uniform():
    out = softmax(Tensor([[0.0, 0.0, 0.0]]))
    assert np.allclose(out.data, 1.0 / 3.0)


def test_softmax_large_logits_no_overflow():
    out = softmax(Tensor([[1000.0, 0.0]]))
    assert np.all(np.isfinite(out.data))
    assert np.allclose(out.data, [[1.0, 0.0]])


def test_softmax_matches_high_precision_values():
    out = softmax(Tensor([[1.0, 2.0, 3.0]]))
    assert np.allclose(out.data[0], SOFTMAX_123, atol=1e-15)


def test_softmax_rows_are_probability_vectors():
    rng = SeededRng(4, "init")
    for _ in range(50):
        v = softmax(Tensor(rng.uniform(-30, 30, (3, 7))))
        assert np.all(v.data >= 0)
        assert np.allclose(v.data.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_empty_input_rejected():
    with pytest.raises(ValueError):
        softmax(Tensor(np.zeros((1, 0))))


def test_log_softmax_is_log_of_softmax():
    v = Tensor([[0.3, -1.2, 4.0]])
    assert np.allclose(log_softmax(v).data, np.log(softmax(v).data), atol=1e-12)


# -- gumbel-softmax ----------------------------------------------------------


def test_gumbel_single_category_always_selected():
    soft, hard = gumbel_softmax(Tensor([[2.5]]), 1.0, SeededRng(0, "election-noise"))
    assert soft.data[0, 0] == pytest.approx(1.0)
    assert hard.data[0, 0] == 1.0


def test_gumbel_uniform_logits_selects_uniformly():
    rng = SeededRng(8, "election-noise")
    n, draws = 4, 100_000
    counts = np.zeros(n)
    row = Tensor(np.zeros((1, n)))
    for _ in range(draws):
        _, hard = gumbel_softmax(row, 1.0, rng)
        counts[int(hard.data.argmax())] += 1
    assert np.all(np.abs(counts / draws - 1.0 / n) <= 0.01)


def test_gumbel_high_beta_sharpens_soft_output():
    # beta scales (noise + logits) jointly, so it sharpens the relaxation but
    # provably cannot change the hard-selection distribution, which stays
    # softmax(logits) for every beta > 0 (Gumbel-max). The stated sharpening
    # limit therefore shows up in the soft vector, not in hard frequencies.
    rng = SeededRng(9, "election-noise")
    logits = Tensor([[5.0, 0.0, 0.0]])
    draws = 10_000
    sharp = 0
    hits = 0
    for _ in range(draws):
        soft, hard = gumbel_softmax(logits, 50.0, rng)
        sharp += soft.data.max() > 0.99
        hits += int(hard.data.argmax()) == 0
    assert sharp / draws >= 0.99
    expected = math.exp(5.0) / (math.exp(5.0) + 2.0)  # 0.98661...
    assert hits / draws == pytest.approx(expected, abs=0.01)


def test_gumbel_hard_is_one_hot_and_soft_sums_to_one():
    rng = SeededRng(10, "election-noise")
    for _ in range(200):
        soft, hard = gumbel_softmax(Tensor(rng.uniform(-3, 3, (1, 5))), 1.0, rng)
        assert sorted(hard.data[0]) == [0.0, 0.0, 0.0, 0.0, 1.0]
        assert soft.data.sum() == pytest.approx(1.0, abs=1e-9)


def test_gumbel_rejects_bad_inputs():
    rng = SeededRng(0, "election-noise")
    with pytest.raises(ValueError, match="beta"):
        gumbel_softmax(Tensor([[1.0, 2.0]]), 0.0, rng)
    with pytest.raises(ValueError, match="finite"):
        gumbel_softmax(Tensor([[np.inf, 0.0]]), 1.0, rng)


def test_gumbel_logit_shift_invariance():
    logits = np.array([[0.7, -0.3, 1.1]])
    s1, h1 = gumbel_softmax(Tensor(logits), 1.0, SeededRng(5, "election-noise"))
    s2, h2 = gumbel_softmax(Tensor(logits + 10.0), 1.0, SeededRng(5, "election-noise"))
    assert np.allclose(s1.data, s2.data, atol=1e-12)
    assert np.array_equal(h1.data, h2.data)


# -- attention ---------------------------------------------------------------


def test_attention_two_agents_attend_fully():
    rng = SeededRng(6, "init")
    coeff = attention_coefficients(Tensor(rng.uniform(-1, 1, (2, 4))), init_uniform(rng, 4, 3))
    assert np.array_equal(np.diag(coeff.data), [0.0, 0.0])
    assert coeff.data[0, 1] == 1.0
    assert coeff.data[1, 0] == 1.0


def test_attention_identical_rows_uniform():
    row = np.array([0.5, -1.0, 2.0, 0.1])
    h = Tensor(np.tile(row, (5, 1)))
    coeff = attention_coefficients(h, init_uniform(SeededRng(7, "init"), 4, 3))
    off_diag = coeff.data[~np.eye(5, dtype=bool)]
    assert np.allclose(off_diag, 0.25, atol=1e-12)


def test_attention_matches_double_loop_oracle():
    rng = SeededRng(12, "init")
    h = rng.uniform(-1, 1, (4, 5))
    w = init_uniform(rng, 5, 3)
    coeff = attention_coefficients(Tensor(h), w)

    proj = h @ w.data
    expected = np.zeros((4, 4))
    for i in range(4):
        scores = {}
        for j in range(4):
            if j != i:
                scores[j] = math.exp(float(proj[i] @ proj[j]) / math.sqrt(3)
                                     - max(float(proj[i] @ proj[k]) / math.sqrt(3)
                                           for k in range(4) if k != i))
        total = sum(scores.values())
        for j, s in scores.items():
            expected[i, j] = s / total
    assert np.allclose(coeff.data, expected, atol=1e-12)


def test_attention_rows_sum_to_one():
    rng = SeededRng(13, "init")
    for _ in range(100):
        n = int(rng.integers(7)) + 2
        coeff = attention_coefficients(
            Tensor(rng.uniform(-2, 2, (n, 6))), init_uniform(rng, 6, 4))
        assert np.allclose(coeff.data.sum(axis=1), 1.0, atol=1e-6)


def test_attention_rejects_single_agent():
    with pytest.raises(ValueError, match="at least 2"):
        attention_coefficients(Tensor(np.ones((1, 4))), _param(np.ones((4, 2))))


# -- multi-head aggregation ---------------------------------------------------


def test_aggregate_zero_value_weights_is_relu_residual():
    rng = SeededRng(14, "init")
    h = rng.uniform(-1, 1, (2, 4))
    head = AttentionHead(w_score=init_uniform(rng, 4, 2), w_value=_param(np.zeros((4, 4))))
    out = multi_head_aggregate(Tensor(h), [head])
    assert np.allclose(out.data, np.maximum(h, 0.0), atol=1e-15)


def test_aggregate_permutation_equivariance():
    rng = SeededRng(15, "init")
    h = rng.uniform(-1, 1, (5, 4))
    heads = [AttentionHead.create(4, 2, rng) for _ in range(3)]
    perm = np.array([3, 0, 4, 1, 2])
    out = multi_head_aggregate(Tensor(h), heads)
    out_perm = multi_head_aggregate(Tensor(h[perm]), heads)
    assert np.allclose(out_perm.data, out.data[perm], atol=1e-12)


def test_aggregate_matches_per_element_oracle():
    rng = SeededRng(16, "init")
    n, d = 3, 4
    h = rng.uniform(-1, 1, (n, d))
    heads = [AttentionHead.create(d, 2, rng) for _ in range(2)]
    out = multi_head_aggregate(Tensor(h), heads)

    cols = []
    for head in heads:
        coeff = attention_coefficients(Tensor(h), head.w_score).data
        block = np.zeros((n, d))
        for i in range(n):
            for k in range(d):
                acc = h[i, k]
                for j in range(n):
                    if j != i:
                        acc += coeff[i, j] * sum(
                            h[j, m] * head.w_value.data[m, k] for m in range(d))
                block[i, k] = max(acc, 0.0)
        cols.append(block)
    assert np.allclose(out.data, np.concatenate(cols, axis=1), atol=1e-12)


def test_aggregate_head_dimension_mismatch():
    rng = SeededRng(18, "init")
    bad = AttentionHead(w_score=init_uniform(rng, 4, 2), w_value=init_uniform(rng, 4, 3))
    with pytest.raises(DimensionError, match="square"):
        multi_head_aggregate(Tensor(np.ones((3, 4))), [bad])
