"""Leader-follower equilibrium by exhaustive enumeration on small matrix games.

For each leader action the follower's best-response set is computed; ties are
broken pessimistically (the follower response that minimizes the leader's
payoff), so the leader maximizes its guaranteed value. Ties between leader
actions break to the lowest index.
"""

from __future__ import annotations

import numpy as np


def stackelberg_enumerate(leader_payoff, follower_payoff) -> tuple[int, int, float]:
    """(leader action, follower response, guaranteed leader value)."""
    leader = np.asarray(leader_payoff, dtype=np.float64)
    follower = np.asarray(follower_payoff, dtype=np.float64)
    if leader.ndim != 2 or leader.shape != follower.shape:
        raise ValueError(
            f"payoff matrices must share a 2-D shape, got {leader.shape} and {follower.shape}")
    p, q = leader.shape
    if p < 1 or q < 1:
        raise ValueError("payoff matrices must be non-empty")

    best_action, best_response, best_value = 0, 0, -np.inf
    for i in range(p):
        responses = np.flatnonzero(follower[i] == follower[i].max())
        j = int(responses[np.argmin(leader[i, responses])])
        value = leader[i, j]
        if value > best_value:
            best_action, best_response, best_value = i, j, value
    return best_action, best_response, float(best_value)
