"""Hermetic invariant suite: gradient certification, sampling distribution
checks, the exhaustive argmax-decomposition check, election hold, simulator
sanity, and the enumeration oracle. No network, no files, laptop-fast."""

from __future__ import annotations

import itertools

import numpy as np

from ..envs import ParticleEnv
from ..numerics import (
    AttentionHead,
    GruParams,
    SeededRng,
    Tensor,
    attention_coefficients,
    grad_check,
    gru_step,
    gumbel_softmax,
    init_uniform,
    init_zeros,
    linear,
    multi_head_aggregate,
    softmax,
    square,
    tsum,
)
from ..qlearn import Hyperparams, Learner
from ..qlearn.replay import Transition
from ..trainer.stackelberg import stackelberg_enumerate


def _toy_episodes(rng, n, obs_dim, n_actions, batch=2, horizon=3):
    episodes = []
    for _ in range(batch):
        steps = []
        for t in range(horizon):
            a = rng.integers(0, n_actions, size=n)
            onehot = np.zeros((n, n_actions))
            onehot[np.arange(n), a] = 1.0
            el = np.zeros(n)
            el[rng.integers(0, n)] = 1.0
            steps.append(Transition(
                rng.uniform(-1, 1, (n, obs_dim)), onehot, float(rng.uniform(-2, 0)),
                rng.uniform(-1, 1, (n, obs_dim)), t == horizon - 1, el))
        episodes.append(steps)
    return episodes


def check_gradients() -> tuple[bool, str]:
    worst = 0.0
    for seed in range(3):
        rng = SeededRng(seed, "init")
        x = Tensor(rng.uniform(-1, 1, (3, 4)))
        w, b = init_uniform(rng, 5, 4), init_zeros(5)
        worst = max(worst, grad_check(lambda: tsum(square(linear(x, w, b))), [w, b]))

        g = GruParams.create(4, 5, rng)
        h0 = Tensor(np.zeros((3, 5)))
        worst = max(worst, grad_check(
            lambda: tsum(square(gru_step(x, gru_step(x, h0, g), g))), g.parameters()))

        H = Tensor(rng.uniform(-1, 1, (4, 6)))
        heads = [AttentionHead.create(6, 3, rng) for _ in range(2)]
        head_params = [p for hd in heads for p in hd.parameters()]
        worst = max(worst, grad_check(
            lambda: tsum(square(multi_head_aggregate(H, heads))), head_params))

        wl = init_uniform(rng, 1, 6)
        worst = max(worst, grad_check(
            lambda: tsum(square(softmax(linear(H, wl, init_zeros(1))))), [wl]))

    # full loss on a toy batch, soft election mode, pinned stop-gradients
    np_rng = np.random.default_rng(7)
    learner = Learner(2, 4, 3, Hyperparams(
        batch_episodes=2, buffer_capacity=4, hidden=4,
        attention_heads=2, head_dim=2, hold_steps=2), SeededRng(7, "init"))
    for tgt in learner.qnets_target:
        for p in tgt.parameters():
            p.data += np_rng.uniform(-0.1, 0.1, p.data.shape)
    episodes = _toy_episodes(np_rng, 2, 4, 3)
    cache: dict = {}
    worst = max(worst, grad_check(
        lambda: learner.loss_on_batch(episodes, election_mode="soft", sg_cache=cache)[0],
        learner.policy_parameters()))
    return worst <= 1e-3, f"worst relative error {worst:.2e} (tolerance 1e-3)"


def check_gumbel_distribution() -> tuple[bool, str]:
    rng = SeededRng(11, "election-noise")
    worst_tv = 0.0
    draws = 100_000
    for logits in ([0.0, 0.0, 0.0, 0.0], [1.0, 0.5, -0.5, 0.0]):
        row = Tensor(np.array([logits]))
        counts = np.zeros(len(logits))
        for _ in range(draws):
            _, hard = gumbel_softmax(row, 1.0, rng)
            counts[int(hard.data.argmax())] += 1
        freq = counts / draws
        expected = np.exp(np.array(logits) - max(logits))
        expected /= expected.sum()
        worst_tv = max(worst_tv, 0.5 * np.abs(freq - expected).sum())
    return worst_tv < 0.01, f"worst total-variation distance {worst_tv:.4f} (< 0.01)"


def check_attention_rows() -> tuple[bool, str]:
    rng = SeededRng(3, "init")
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(6)) + 2
        H = Tensor(rng.uniform(-2, 2, (n, 5)))
        w = init_uniform(rng, 5, 3)
        coeff = attention_coefficients(H, w)
        worst = max(worst, float(np.abs(coeff.data.sum(axis=1) - 1.0).max()))
        if np.abs(np.diag(coeff.data)).max() != 0.0:
            return False, "nonzero diagonal"
    return worst <= 1e-6, f"worst row-sum deviation {worst:.2e} (tolerance 1e-6)"


def check_argmax_decomposition() -> tuple[bool, str]:
    rng = SeededRng(5, "init")
    trials = 0
    for n in range(2, 6):
        for _ in range(20):
            tables = rng.uniform(-5, 5, (n, 5))
            per_agent = tuple(int(t.argmax()) for t in tables)
            best, best_joint = -np.inf, None
            for joint in itertools.product(range(5), repeat=n):
                total = sum(tables[i][a] for i, a in enumerate(joint))
                if total > best:
                    best, best_joint = total, joint
            if best_joint != per_agent:
                return False, f"violation at n={n}: {best_joint} != {per_agent}"
            trials += 1
    return True, f"{trials} exhaustive trials, zero violations"


def check_election_hold() -> tuple[bool, str]:
    from ..efa import ElectionMechanism

    rng_init = SeededRng(2, "init")
    mech = ElectionMechanism(obs_dim=6, n_actions=5, rng=rng_init, hidden=8,
                             heads=2, head_dim=2, hold_steps=5)
    rng_noise = SeededRng(2, "election-noise")
    rng_obs = SeededRng(2, "env")
    for episode in range(50):
        hidden = mech.initial_hidden(3)
        prev = None
        elections = 0
        for t in range(25):
            obs = rng_obs.uniform(-1, 1, (3, 6))
            acts = np.zeros((3, 5))
            weights, hidden = mech.elect(obs, acts, t, prev, hidden, rng_noise)
            if t % 5 == 0:
                elections += 1
                if weights.age != 0:
                    return False, f"fresh election has age {weights.age}"
            elif weights.elected != prev.elected:
                return False, f"elected changed off-schedule at t={t}"
            prev = weights
        if elections != 5:
            return False, f"{elections} elections in a 25-step episode"
    return True, "hold invariant over 50 episodes, 5 elections each"


def check_rmsprop() -> tuple[bool, str]:
    from ..numerics import Parameter, rmsprop_step

    p = Parameter(np.zeros((1, 1)))
    p.grad[...] = 1.0
    rmsprop_step([p], lr=0.01, decay=0.99)
    expected = -0.01 * 1.0 / (np.sqrt(0.01) + 1e-8)
    ok = abs(p.data[0, 0] - expected) < 1e-12 and p.grad[0, 0] == 0.0
    return ok, f"single step delta {p.data[0, 0]:.6f} (expected {expected:.6f})"


def check_stackelberg() -> tuple[bool, str]:
    rng = SeededRng(13, "init")
    for _ in range(200):
        leader = rng.integers(10, size=(4, 4)).astype(float)
        follower = rng.integers(10, size=(4, 4)).astype(float)
        got = stackelberg_enumerate(leader, follower)
        best = None
        for i in range(4):
            responses = [j for j in range(4) if follower[i][j] == max(follower[i])]
            value = min(leader[i][j] for j in responses)
            if best is None or value > best[2]:
                j_star = min((j for j in responses if leader[i][j] == value))
                best = (i, j_star, value)
        if got != best:
            return False, f"disagreement: {got} vs brute force {best}"
    return True, "200 random 4x4 games agree with brute force"


def check_env() -> tuple[bool, str]:
    env = ParticleEnv("coop_nav", 3)
    s1, o1 = env.reset(SeededRng(9, "env"))
    s2, o2 = env.reset(SeededRng(9, "env"))
    if not (np.array_equal(s1.agent_pos, s2.agent_pos)
            and all(np.array_equal(a, b) for a, b in zip(o1, o2))):
        return False, "reset not deterministic"
    # geometric speed decay under stop actions
    state = s1
    state.agent_vel[...] = 1.0
    state, _ = env.step(state, [4, 4, 4])
    if not np.allclose(state.agent_vel, 0.75):
        return False, "velocity damping incorrect"
    # reward bound
    rng = SeededRng(10, "env")
    for _ in range(20):
        state, _ = env.reset(rng)
        for _ in range(25):
            state, res = env.step(state, rng.integers(5, size=3))
            if res.reward > 0:
                return False, f"positive coop_nav reward {res.reward}"
    return True, "determinism, damping, and reward bound hold"


CHECKS = [
    ("gradient soundness", check_gradients),
    ("gumbel-softmax selection frequencies", check_gumbel_distribution),
    ("attention row normalization", check_attention_rows),
    ("additive-mixing argmax decomposition", check_argmax_decomposition),
    ("election hold period", check_election_hold),
    ("rmsprop update rule", check_rmsprop),
    ("stackelberg enumeration vs brute force", check_stackelberg),
    ("particle environment sanity", check_env),
]


def run_selftest(quiet: bool = False) -> int:
    passed = 0
    for name, check in CHECKS:
        ok, detail = check()
        passed += ok
        if not quiet or not ok:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    print(f"{passed}/{len(CHECKS)} checks passed")
    return 0 if passed == len(CHECKS) else 1
