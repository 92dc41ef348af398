"""Rollout collection over a lockstep batch of environments.

All scenarios are fixed-horizon, so collection proceeds in whole-episode
blocks: every env in the batch is reset together and stepped for one
horizon.  Blocks repeat until the configured number of env steps (or
episodes) is gathered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs import BaseEnv, make_env
from ..nn.model import ModelParams, sample_action, team_forward
from .advantages import gae
from .config import TrainConfig


@dataclass
class RolloutBatch:
    """Trajectories, (T, E, ...) with T a whole number of episode blocks."""

    obs: np.ndarray          # (T, E, n, D) post-noise, as seen by the policy
    adjacency: np.ndarray    # (T, E, n, n)
    actions: np.ndarray      # (T, E, n, A) unclamped samples
    log_probs: np.ndarray    # (T, E, n)
    old_means: np.ndarray    # (T, E, n, A)
    old_log_stds: np.ndarray  # (n, A)
    rewards: np.ndarray      # (T, E, n)
    values: np.ndarray       # (T, E, n)
    dones: np.ndarray        # (T, E) bool, True on the last step of each block
    bootstrap_values: np.ndarray  # (blocks, E, n); zero at true terminals
    episode_rewards: np.ndarray   # (blocks, E) summed team reward
    episode_success: np.ndarray   # (blocks, E) bool
    episode_pos_reward: np.ndarray  # (blocks, E) positional component (0 if n/a)
    block_len: int

    @property
    def n_steps(self) -> int:
        return self.obs.shape[0] * self.obs.shape[1]

    @property
    def n_episodes(self) -> int:
        return self.episode_rewards.size

    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def compute_advantages(self, gamma: float, lam: float) -> None:
        blocks = self.rewards.shape[0] // self.block_len
        T, E, n = self.rewards.shape
        r = self.rewards.reshape(blocks, self.block_len, E, n)
        v = self.values.reshape(blocks, self.block_len, E, n)
        d = self.dones.reshape(blocks, self.block_len, E)
        advs, rets = [], []
        for b in range(blocks):
            vb = np.concatenate([v[b], self.bootstrap_values[b][None]], axis=0)
            a, ret = gae(r[b], vb, d[b], gamma, lam)
            advs.append(a)
            rets.append(ret)
        self.advantages = np.concatenate(advs, axis=0)
        self.returns = np.concatenate(rets, axis=0)


def _policy_forward_np(model: ModelParams, obs: np.ndarray, adj: np.ndarray):
    """Forward pass, returning plain arrays (means (n,B,A), log_stds (n,A), values (n,B))."""
    outs = team_forward(model, obs, adj)
    means = np.stack([o[0].data for o in outs])
    log_stds = np.stack([o[1].data for o in outs])
    values = np.stack([o[2].data for o in outs])
    return means, log_stds, values


def _log_prob_np(action, mean, log_std):
    z = (action - mean) / np.exp(log_std)
    return -0.5 * np.sum(z**2, axis=-1) - np.sum(log_std) \
        - 0.5 * action.shape[-1] * np.log(2 * np.pi)


def collect_rollouts(model: ModelParams, env: BaseEnv, config: TrainConfig,
                     rng: np.random.Generator) -> RolloutBatch:
    """Sample whole-episode blocks until the step/episode budget is met."""
    E = env.batch_size
    horizon = env.spec.horizon
    if config.episodes_per_iteration > 0:
        blocks = max(1, -(-config.episodes_per_iteration // E))
    else:
        blocks = max(1, -(-config.batch_size // (E * horizon)))

    scenario_terminal = env.spec.scenario_id == "B"  # horizon is a true terminal
    cols: dict[str, list] = {k: [] for k in
                             ("obs", "adj", "act", "logp", "mean", "rew", "val", "done")}
    boots, ep_rew, ep_succ, ep_pos = [], [], [], []
    log_stds = None

    for _ in range(blocks):
        seed = int(rng.integers(2**31 - 1))
        _, obs = env.reset(seed)
        block_rew = np.zeros(E)
        block_pos = np.zeros(E)
        for t in range(horizon):
            if config.obs_noise_train > 0:
                obs = obs + rng.uniform(-config.obs_noise_train,
                                        config.obs_noise_train, size=obs.shape)
            adj = env.graph()
            means, log_stds, values = _policy_forward_np(model, obs, adj)
            actions = np.stack([
                sample_action(means[i], log_stds[i], rng)
                for i in range(env.n_agents)
            ])
            logp = np.stack([
                _log_prob_np(actions[i], means[i], log_stds[i])
                for i in range(env.n_agents)
            ])
            res = env.step(actions)
            cols["obs"].append(obs)
            cols["adj"].append(adj)
            cols["act"].append(actions)
            cols["logp"].append(logp)
            cols["mean"].append(means)
            cols["rew"].append(res.rewards)
            cols["val"].append(values)
            cols["done"].append(t == horizon - 1)
            block_rew += res.rewards[0]
            block_pos += res.info.get("positional_reward", np.zeros(E))
            obs = res.observations
        if scenario_terminal:
            boots.append(np.zeros((E, env.n_agents)))
        elif config.bootstrap_truncation:
            _, _, v_end = _policy_forward_np(model, obs, env.graph())
            boots.append(v_end.T)
        else:
            boots.append(np.zeros((E, env.n_agents)))
        ep_rew.append(block_rew)
        ep_succ.append(env.success())
        ep_pos.append(block_pos)

    # stack to (T, E, ...): recorded per-step arrays are (n, E, ...)
    obs_arr = np.stack([np.moveaxis(o, 0, 1) for o in cols["obs"]])
    act_arr = np.stack([np.moveaxis(a, 0, 1) for a in cols["act"]])
    logp_arr = np.stack([c.T for c in cols["logp"]])
    mean_arr = np.stack([np.moveaxis(m, 0, 1) for m in cols["mean"]])
    rew_arr = np.stack([c.T for c in cols["rew"]])
    val_arr = np.stack([c.T for c in cols["val"]])
    adj_arr = np.stack(cols["adj"])
    done_arr = np.broadcast_to(np.array(cols["done"])[:, None], rew_arr.shape[:2]).copy()

    return RolloutBatch(
        obs=obs_arr, adjacency=adj_arr, actions=act_arr, log_probs=logp_arr,
        old_means=mean_arr, old_log_stds=log_stds.copy(), rewards=rew_arr,
        values=val_arr, dones=done_arr,
        bootstrap_values=np.stack(boots),
        episode_rewards=np.stack(ep_rew),
        episode_success=np.stack(ep_succ),
        episode_pos_reward=np.stack(ep_pos),
        block_len=horizon,
    )


def make_rollout_env(spec, config: TrainConfig, physics=None) -> BaseEnv:
    return make_env(spec, physics=physics, batch_size=config.total_envs,
                    typing_mode=config.typing_mode)
