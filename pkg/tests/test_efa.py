"""Election mechanism: encoding, aggregation, election, hold, differentiability."""

import numpy as np
import pytest

from efa_marl.efa import (
    ElectionMechanism,
    ElectionWeights,
    blended_first_move_observation,
    first_move_observation,
    fixed_election,
)
from efa_marl.numerics import (
    SeededRng,
    Tensor,
    backward,
    grad_check,
    gru_step,
    linear,
    multi_head_aggregate,
    relu,
    softmax,
    tsum,
)


def make_mechanism(seed=0, obs_dim=6, n_actions=4, hidden=8, heads=2, head_dim=3, hold=5):
    return ElectionMechanism(obs_dim, n_actions, SeededRng(seed, "init"),
                             hidden=hidden, heads=heads, head_dim=head_dim,
                             hold_steps=hold)


def zero_parameters(mech):
    for p in mech.parameters():
        p.data[...] = 0.0


def test_encode_zero_parameters_halves_hidden():
    mech = make_mechanism()
    zero_parameters(mech)
    hidden = Tensor(np.full((3, 8), 2.0))
    out = mech.encode(np.ones((3, 6)), np.zeros((3, 4)), hidden)
    assert np.allclose(out.data, 1.0)  # gru zero case: h' = 0.5 * h_prev


def test_encode_identical_inputs_give_identical_rows():
    mech = make_mechanism(seed=3)
    obs = np.tile(np.linspace(-1, 1, 6), (4, 1))
    acts = np.tile(np.eye(4)[1], (4, 1))
    out = mech.encode(obs, acts, mech.initial_hidden(4))
    assert np.allclose(out.data, out.data[0])


def test_encode_matches_sequential_per_agent_oracle():
    mech = make_mechanism(seed=4)
    rng = SeededRng(9, "env")
    obs = rng.uniform(-1, 1, (3, 6))
    acts = np.eye(4)[rng.integers(4, size=3)]
    batched = mech.encode(obs, acts, mech.initial_hidden(3))
    for i in range(3):
        x = np.concatenate([obs[i], acts[i]]).reshape(1, -1)
        pre = relu(linear(Tensor(x), mech.enc_w, mech.enc_b))
        single = gru_step(pre, Tensor(np.zeros((1, 8))), mech.enc_gru)
        assert np.allclose(batched.data[i], single.data[0], atol=1e-12)


def test_aggregate_delegates_to_multi_head_aggregate():
    mech = make_mechanism(seed=5)
    h = Tensor(SeededRng(1, "env").uniform(-1, 1, (3, 8)))
    assert np.array_equal(mech.aggregate(h).data,
                          multi_head_aggregate(h, mech.heads).data)


def test_aggregate_single_agent_bypass():
    mech = make_mechanism(seed=6)
    h = Tensor(np.arange(8.0).reshape(1, 8))
    out = mech.aggregate(h)
    assert out.shape == (1, 16)  # two heads replicate the row
    assert np.array_equal(out.data, np.tile(h.data, (1, 2)))


def test_aggregate_output_permutes_with_input():
    mech = make_mechanism(seed=7)
    h = SeededRng(2, "env").uniform(-1, 1, (4, 8))
    perm = np.array([2, 0, 3, 1])
    out = mech.aggregate(Tensor(h)).data
    out_p = mech.aggregate(Tensor(h[perm])).data
    assert np.allclose(out_p, out[perm], atol=1e-12)


def test_generate_single_agent_trivial():
    mech = make_mechanism(seed=8)
    weights = mech.generate(Tensor(np.ones((1, 16))), 1.0, SeededRng(0, "election-noise"))
    assert weights.elected == 0
    assert np.array_equal(weights.hard, [1.0])
    assert weights.age == 0


def test_generate_identical_rows_equal_logits_and_uniform_election():
    mech = make_mechanism(seed=9)
    mfeat = Tensor(np.tile(np.linspace(0, 1, 16), (3, 1)))
    logits = mech.logits(mfeat)
    assert np.allclose(logits.data, logits.data[0, 0])

    rng = SeededRng(10, "election-noise")
    counts = np.zeros(3)
    draws = 100_000
    for _ in range(draws):
        counts[mech.generate(mfeat, 1.0, rng).elected] += 1
    assert np.all(np.abs(counts / draws - 1.0 / 3.0) <= 0.01)


def test_election_soft_distribution_shift_invariant():
    mech = make_mechanism(seed=11)
    mfeat = Tensor(SeededRng(3, "env").uniform(-1, 1, (4, 16)))
    w1 = mech.generate(mfeat, 1.0, SeededRng(77, "election-noise"))
    mech.gen_b.data[...] += 5.0  # shifts every logit equally
    w2 = mech.generate(mfeat, 1.0, SeededRng(77, "election-noise"))
    assert np.allclose(w1.soft, w2.soft, atol=1e-12)
    assert w1.elected == w2.elected


def test_elect_fresh_at_t0_and_holds_between():
    mech = make_mechanism(seed=12, hold=5)
    rng_noise = SeededRng(1, "election-noise")
    obs_rng = SeededRng(2, "env")
    hidden = mech.initial_hidden(3)
    acts = np.zeros((3, 4))

    weights, hidden = mech.elect(obs_rng.uniform(-1, 1, (3, 6)), acts, 0, None, hidden, rng_noise)
    assert weights.age == 0
    held = weights
    for t in range(1, 5):
        held, hidden = mech.elect(obs_rng.uniform(-1, 1, (3, 6)), acts, t, held, hidden, rng_noise)
        assert held.elected == weights.elected
        assert held.age == t
    fresh, hidden = mech.elect(obs_rng.uniform(-1, 1, (3, 6)), acts, 5, held, hidden, rng_noise)
    assert fresh.age == 0


def test_elect_hold_example_t3():
    mech = make_mechanism(seed=13, hold=5)
    prev = ElectionWeights(hard=np.array([0.0, 0.0, 1.0]),
                           soft=np.array([0.1, 0.2, 0.7]), elected=2, age=2)
    weights, _ = mech.elect(np.zeros((3, 6)), np.zeros((3, 4)), 3, prev,
                            mech.initial_hidden(3), SeededRng(0, "election-noise"))
    assert weights.elected == 2
    assert weights.age == 3


def test_exactly_five_elections_per_25_step_episode():
    mech = make_mechanism(seed=14, hold=5)
    rng_noise = SeededRng(4, "election-noise")
    obs_rng = SeededRng(5, "env")
    hidden = mech.initial_hidden(2)
    prev = None
    fresh_steps = []
    for t in range(25):
        prev, hidden = mech.elect(obs_rng.uniform(-1, 1, (2, 6)), np.zeros((2, 4)),
                                  t, prev, hidden, rng_noise)
        if prev.age == 0:
            fresh_steps.append(t)
    assert fresh_steps == [0, 5, 10, 15, 20]


def test_encoder_hidden_advances_on_hold_steps():
    mech = make_mechanism(seed=15, hold=5)
    rng_noise = SeededRng(6, "election-noise")
    obs_rng = SeededRng(7, "env")
    hidden = mech.initial_hidden(2)
    prev, h1 = mech.elect(obs_rng.uniform(-1, 1, (2, 6)), np.zeros((2, 4)), 0, None, hidden, rng_noise)
    _, h2 = mech.elect(obs_rng.uniform(-1, 1, (2, 6)), np.zeros((2, 4)), 1, prev, h1, rng_noise)
    assert not np.allclose(h1.data, h2.data)


def test_forced_election_is_constant_and_consumes_no_noise():
    mech = make_mechanism(seed=16)
    rng_noise = SeededRng(8, "election-noise")
    before = rng_noise.random()
    rng_noise2 = SeededRng(8, "election-noise")
    w, _ = mech.elect(np.ones((3, 6)), np.zeros((3, 4)), 0, None,
                      mech.initial_hidden(3), rng_noise2, forced=1)
    assert w.elected == 1
    assert np.array_equal(w.hard, [0.0, 1.0, 0.0])
    assert rng_noise2.random() == before  # stream untouched by the forced path


def test_first_move_observation_selects_elected_row():
    obs = np.arange(12.0).reshape(3, 4)
    weights = fixed_election(1, 3)
    assert np.array_equal(first_move_observation(obs, weights), obs[1])


def test_first_move_observation_permutation_consistent():
    obs = np.arange(12.0).reshape(3, 4)
    perm = np.array([2, 0, 1])
    w = fixed_election(2, 3)
    w_perm = fixed_election(int(np.flatnonzero(perm == 2)[0]), 3)
    assert np.array_equal(first_move_observation(obs, w),
                          first_move_observation(obs[perm], w_perm))


def test_first_move_observation_rejects_invalid_one_hot():
    obs = np.zeros((2, 3))
    bad = ElectionWeights(hard=np.array([0.5, 0.5]), soft=np.array([0.5, 0.5]),
                          elected=0, age=0)
    with pytest.raises(ValueError, match="one-hot"):
        first_move_observation(obs, bad)


def test_soft_election_path_has_nonzero_gradients_everywhere():
    mech = make_mechanism(seed=17, obs_dim=4, n_actions=3, hidden=4, heads=2, head_dim=2)
    rng = SeededRng(18, "env")
    obs = rng.uniform(-1, 1, (3, 4))
    acts = np.eye(3)[rng.integers(3, size=3)]
    downstream = Tensor(rng.uniform(-1, 1, (3, 1)))

    def f():
        h = mech.encode(obs, acts, mech.initial_hidden(3))
        soft = mech.soft_weights(h)
        return tsum(soft @ downstream)

    err = grad_check(f, mech.parameters())
    assert err <= 1e-3

    for p in mech.parameters():
        p.zero_grad()
    backward(f())
    grouped = {
        "encoder": [mech.enc_w, mech.enc_b, *mech.enc_gru.parameters()],
        "aggregator": [q for head in mech.heads for q in head.parameters()],
        "generator": [mech.gen_w, mech.gen_b],
    }
    for name, params in grouped.items():
        assert any(p.grad.any() for p in params), f"no gradient reached the {name}"


def test_soft_weights_batched_matches_per_group():
    mech = make_mechanism(seed=19, hidden=8)
    rng = SeededRng(20, "env")
    batch, n = 4, 3
    h_all = Tensor(rng.uniform(-1, 1, (batch * n, 8)))
    soft_all = mech.soft_weights_batched(h_all, batch, n)
    assert soft_all.shape == (batch, n)
    for b in range(batch):
        block = Tensor(h_all.data[b * n : (b + 1) * n])
        single = mech.soft_weights(block)
        assert np.allclose(soft_all.data[b], single.data[0], atol=1e-12)


def test_blended_first_move_observation_straight_through():
    obs = np.arange(8.0).reshape(2, 4)
    soft = softmax(Tensor([[0.3, -0.2]]))
    hard = np.array([0.0, 1.0])
    blended = blended_first_move_observation(obs, soft, hard)
    assert np.allclose(blended.data[0], obs[1], atol=1e-12)


def test_election_weights_invariants_after_every_call():
    mech = make_mechanism(seed=21)
    rng_noise = SeededRng(22, "election-noise")
    obs_rng = SeededRng(23, "env")
    hidden = mech.initial_hidden(4)
    prev = None
    for t in range(25):
        prev, hidden = mech.elect(obs_rng.uniform(-1, 1, (4, 6)), np.zeros((4, 4)),
                                  t, prev, hidden, rng_noise)
        assert prev.hard.sum() == 1.0
        assert set(np.unique(prev.hard)) <= {0.0, 1.0}
        assert prev.soft.sum() == pytest.approx(1.0, abs=1e-6)
        assert prev.elected == int(prev.hard.argmax())
        assert 0 <= prev.age < 5


def test_permutation_consistency_of_election_probabilities():
    mech = make_mechanism(seed=24)
    rng = SeededRng(25, "env")
    obs = rng.uniform(-1, 1, (4, 6))
    acts = np.eye(4)[rng.integers(4, size=4)]
    perm = np.array([3, 1, 0, 2])

    h = mech.encode(obs, acts, mech.initial_hidden(4))
    soft = mech.soft_weights(h).data[0]
    h_p = mech.encode(obs[perm], acts[perm], mech.initial_hidden(4))
    soft_p = mech.soft_weights(h_p).data[0]
    assert np.allclose(soft_p, soft[perm], atol=1e-12)
