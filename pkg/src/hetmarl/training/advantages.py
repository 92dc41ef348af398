"""Discounted returns and generalized advantage estimation.

All functions are vectorized over trailing axes (env, agent); the leading
axis is time.  Episode boundaries are respected via the ``dones`` flags:
nothing bleeds across a done step.
"""

from __future__ import annotations

import numpy as np


def discounted_returns(rewards: np.ndarray, dones: np.ndarray,
                       gamma: float) -> np.ndarray:
    """v_t = sum_k gamma^k r_{t+k} within each episode segment."""
    rewards = np.asarray(rewards, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    out = np.zeros_like(rewards)
    acc = np.zeros(rewards.shape[1:])
    for t in range(len(rewards) - 1, -1, -1):
        cont = ~_expand(dones[t], rewards.shape[1:])
        acc = rewards[t] + gamma * acc * cont
        out[t] = acc
    return out


def gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
        gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """GAE advantages and return targets.

    values has one extra leading entry, so values[t+1] always exists.  At a
    done step values[t+1] must hold that segment's bootstrap: 0 for a true
    terminal, the critic estimate for a truncation.
    A_t = sum_k (gamma*lam)^k delta_{t+k}, delta_t = r_t + gamma V_{t+1} - V_t,
    with the recursion reset at done steps; returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    T = len(rewards)
    if len(values) != T + 1:
        raise ValueError("values must include the bootstrap entry (length T+1)")
    adv = np.zeros_like(rewards)
    acc = np.zeros(rewards.shape[1:])
    for t in range(T - 1, -1, -1):
        cont = ~_expand(dones[t], rewards.shape[1:])
        delta = rewards[t] + gamma * values[t + 1] - values[t]
        acc = delta + gamma * lam * acc * cont
        adv[t] = acc
    return adv, adv + values[:-1]


def _expand(done_t: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Broadcast a per-env done flag over any trailing agent axes."""
    done_t = np.asarray(done_t, dtype=bool)
    while done_t.ndim < len(shape):
        done_t = done_t[..., None]
    return np.broadcast_to(done_t, shape)
