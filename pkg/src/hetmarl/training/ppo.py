"""Clipped-surrogate PPO update with adaptive KL penalty.

One update runs ``sgd_iters`` epochs of shuffled minibatches over the
rollout batch.  The loss per agent is

    -min(rho * A, clip(rho, 1-eps, 1+eps) * A)
    + value_coeff * (V - return)^2
    + kl_coeff * KL(old || new)
    - entropy_coeff * entropy

with batch-normalized advantages.  In shared mode all agents alias one
parameter set, so their sample gradients pool automatically; in per-agent
mode each set receives its own agent's gradients plus whatever flows across
the communication graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import autodiff as ad
from ..nn.autodiff import Tensor
from ..nn.model import ModelParams, gaussian_kl, log_prob_and_entropy, team_forward
from .config import TrainConfig
from .rollout import RolloutBatch


class TrainingAbort(RuntimeError):
    """Non-finite loss or gradients; iteration aborted with diagnostics."""


@dataclass
class TrainMetrics:
    iteration: int = 0
    episodes: int = 0
    mean_episode_reward: float = 0.0
    success_rate: float = 0.0
    policy_loss: float = 0.0
    value_loss: float = 0.0
    mean_kl: float = 0.0
    entropy: float = 0.0
    grad_norm: float = 0.0
    wall_time_s: float = 0.0

    FIELDS = ("iteration", "episodes", "mean_episode_reward", "success_rate",
              "policy_loss", "value_loss", "mean_kl", "entropy", "grad_norm",
              "wall_time_s")

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class Adam:
    """Per-parameter adaptive moment estimates keyed by tensor name."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, Tensor], grads: dict[str, np.ndarray],
             lr: float) -> None:
        self.t += 1
        b1c = 1 - self.beta1**self.t
        b2c = 1 - self.beta2**self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m.get(name)
            if m is None:
                m = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)
            v = self.v[name]
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g**2
            self.m[name], self.v[name] = m, v
            p.data = p.data - lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    if adv.size <= 1:
        return adv
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float(np.sum(g**2)) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for k in grads:
            grads[k] = grads[k] * scale
    return total


def _minibatch_loss(model: ModelParams, obs, adj, actions, old_logp, old_means,
                    old_log_stds, adv, ret, config: TrainConfig, kl_coeff: float):
    """Joint loss over all agents for one minibatch of team rows."""
    outs = team_forward(model, obs, adj)
    n = model.n_agents
    loss = None
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "kl": 0.0, "entropy": 0.0}
    eps = config.clip_epsilon
    for i in range(n):
        mean, log_std, value = outs[i]
        logp, entropy = log_prob_and_entropy(mean, log_std, actions[i])
        ratio = ad.exp(logp - Tensor(old_logp[i]))
        a = Tensor(adv[i])
        surrogate = ad.minimum(ratio * a, ratio.clip(1 - eps, 1 + eps) * a)
        policy_loss = -surrogate.mean()
        value_loss = ((value - Tensor(ret[i]))**2).mean()
        kl = gaussian_kl(old_means[i], old_log_stds[i], mean, log_std).mean()
        term = (policy_loss + config.value_coeff * value_loss
                + kl_coeff * kl - config.entropy_coeff * entropy)
        loss = term if loss is None else loss + term
        stats["policy_loss"] += float(policy_loss.data)
        stats["value_loss"] += float(value_loss.data)
        stats["kl"] += float(kl.data)
        stats["entropy"] += float(entropy.data)
    for k in stats:
        stats[k] /= n
    return loss, stats


def ppo_update(batch: RolloutBatch, model: ModelParams, config: TrainConfig,
               optimizer: Adam, rng: np.random.Generator,
               kl_coeff: float) -> tuple[TrainMetrics, float]:
    """Run the epochs over ``batch``; returns metrics and the adapted kl_coeff."""
    if batch.advantages is None:
        raise ValueError("compute_advantages() must run before ppo_update()")
    T, E, n = batch.rewards.shape
    rows = T * E

    def flat(x):   # (T, E, n, ...) -> (n, rows, ...)
        return np.moveaxis(x.reshape(rows, *x.shape[2:]), 1, 0)

    obs = flat(batch.obs)
    adj = batch.adjacency.reshape(rows, n, n)
    actions = flat(batch.actions)
    old_logp = flat(batch.log_probs)
    old_means = flat(batch.old_means)
    adv = normalize_advantages(batch.advantages)
    adv = flat(adv)
    ret = flat(batch.returns)

    params = model.named_parameters()
    mb = min(config.minibatch_size, rows)
    last_stats: dict = {}
    grad_norm = 0.0
    for _ in range(config.sgd_iters):
        order = rng.permutation(rows)
        for start in range(0, rows - mb + 1, mb):
            idx = order[start:start + mb]
            loss, stats = _minibatch_loss(
                model, obs[:, idx], adj[idx], actions[:, idx], old_logp[:, idx],
                old_means[:, idx], batch.old_log_stds, adv[:, idx], ret[:, idx],
                config, kl_coeff)
            if not np.isfinite(loss.data):
                raise TrainingAbort(f"non-finite loss: {stats}")
            model.zero_grad()
            loss.backward()
            grads = {k: (t.grad if t.grad is not None else np.zeros_like(t.data))
                     for k, t in params.items()}
            grad_norm = clip_grad_norm(grads, config.grad_clip)
            optimizer.step(params, grads, config.lr)
            last_stats = stats

    mean_kl = last_stats.get("kl", 0.0)
    if mean_kl > 2.0 * config.kl_target:
        kl_coeff *= 2.0
    elif mean_kl < config.kl_target / 2.0:
        kl_coeff *= 0.5

    metrics = TrainMetrics(
        episodes=batch.n_episodes,
        mean_episode_reward=float(batch.episode_rewards.mean()),
        success_rate=float(batch.episode_success.mean()),
        policy_loss=last_stats.get("policy_loss", 0.0),
        value_loss=last_stats.get("value_loss", 0.0),
        mean_kl=mean_kl,
        entropy=last_stats.get("entropy", 0.0),
        grad_norm=grad_norm,
    )
    return metrics, kl_coeff
