"""Compiled inner loops.

The Python-visible wrappers live in :mod:`mabsim.bandit` and
:mod:`mabsim.agents`; these functions only touch plain arrays.  Each one is a
numba ``njit`` function, and ``.py_func`` gives the uncompiled original.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def draw_reward(mean, noise, gaussian):
    if gaussian:
        return mean + noise
    return 1.0 if noise < mean else 0.0


@njit(cache=True)
def ucb_kernel(arms, means, noise, gaussian):
    """Run UCB over ``arms`` (ascending, 1-based) for ``noise.size`` steps.

    Returns (pulled arm ids, per-arm counts, per-arm empirical means, rewards).
    Ties in the index go to the first (lowest-id) arm, so unpulled arms are
    tried in ascending order before any bonus comparison happens.
    """
    k = arms.size
    horizon = noise.size
    counts = np.zeros(k, np.int64)
    mu = np.zeros(k, np.float64)
    pulled = np.empty(horizon, np.int32)
    rewards = np.empty(horizon, np.float64)
    for step in range(horizon):
        t = step + 1
        log_t = math.log(t)
        best = 0
        best_val = -np.inf
        for a in range(k):
            n = counts[a]
            if n == 0:
                val = np.inf
            else:
                val = mu[a] + math.sqrt(2.0 * log_t / n)
            if val > best_val:
                best_val = val
                best = a
        arm = arms[best]
        r = draw_reward(means[arm - 1], noise[step], gaussian)
        n = counts[best]
        counts[best] = n + 1
        mu[best] = (mu[best] * n + r) / (n + 1)
        pulled[step] = arm
        rewards[step] = r
    return pulled, counts, mu, rewards


@njit(cache=True)
def full_comm_kernel(indptr, indices, means, noise, gaussian, counts, mu, totals, pulled):
    """Advance the every-step data-sharing baseline by ``noise.shape[1]`` steps.

    ``counts``/``mu``/``totals`` hold each agent's pooled statistics (own
    samples plus everything its neighbours reported) and are updated in place.
    All agents choose from the statistics available at the start of a step;
    samples are then merged in ascending sender order.
    """
    n_agents, n_steps = noise.shape
    n_arms = means.size
    choice = np.empty(n_agents, np.int64)
    for s in range(n_steps):
        for n in range(n_agents):
            log_t = math.log(totals[n] + 1)
            best = 0
            best_val = -np.inf
            for a in range(n_arms):
                c = counts[n, a]
                if c == 0:
                    val = np.inf
                else:
                    val = mu[n, a] + math.sqrt(2.0 * log_t / c)
                if val > best_val:
                    best_val = val
                    best = a
            choice[n] = best
        for n in range(n_agents):
            a = choice[n]
            r = draw_reward(means[a], noise[n, s], gaussian)
            pulled[n, s] = a + 1
            _merge(counts, mu, totals, n, a, r)
            for e in range(indptr[n], indptr[n + 1]):
                _merge(counts, mu, totals, indices[e], a, r)


@njit(cache=True)
def _merge(counts, mu, totals, m, a, r):
    c = counts[m, a]
    counts[m, a] = c + 1
    mu[m, a] = (mu[m, a] * c + r) / (c + 1)
    totals[m] += 1
