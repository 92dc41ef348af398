"""Deployment evaluation: noise sweeps, vector fields, rollout traces.

Everything here emits data (CSV / line-delimited JSON); figure rendering
lives in :mod:`hetmarl.figures`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envs import make_env
from .nn.model import ModelParams, sample_action
from .training.rollout import _policy_forward_np


class EvalConfigError(ValueError):
    """Checkpoint/scenario mismatch or invalid evaluation request."""


def inject_noise(obs: np.ndarray, magnitude: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Add U(-magnitude, +magnitude) to every observation entry.

    The explicit-index entry, when present, is part of the observation and
    is perturbed like any other entry.
    """
    if magnitude < 0:
        raise ValueError("noise magnitude must be non-negative")
    if magnitude == 0:
        return obs
    return obs + rng.uniform(-magnitude, magnitude, size=np.shape(obs))


@dataclass
class EvalSummary:
    n_runs: int
    noise: float
    mean_reward: float = float("nan")
    std_reward: float = float("nan")
    success_rate: float = float("nan")
    mean_episode_length: float = float("nan")


@dataclass
class NoiseSweepResult:
    levels: list[float]
    mean_norm: list[float]
    std_norm: list[float]
    mean_raw: list[float]
    std_raw: list[float]
    anchor: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["noise", "mean", "std"])
            for row in zip(self.levels, self.mean_norm, self.std_norm):
                w.writerow([f"{x:.10g}" for x in row])


@dataclass
class VectorFieldTable:
    v1: np.ndarray   # (cells,)
    v2: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    resolution: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["v1", "v2", "f1", "f2"])
            for row in zip(self.v1, self.v2, self.f1, self.f2):
                w.writerow([f"{x:.10g}" for x in row])


@dataclass
class RolloutTrace:
    records: list[dict] = field(default_factory=list)
    success: bool = False

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for rec in self.records:
                f.write(json.dumps(rec) + "\n")
            f.write(json.dumps({"terminal": True, "success": self.success}) + "\n")


def _check_compat(model: ModelParams, manifest: dict | None, spec) -> None:
    if manifest is not None and manifest.get("scenario_id") != spec.scenario_id:
        raise EvalConfigError(
            f"checkpoint trained on scenario {manifest.get('scenario_id')!r}, "
            f"requested {spec.scenario_id!r}")


def _typing_mode(model: ModelParams, env_cls_obs_dim: int) -> str:
    return "explicit_index" if model.layout.obs_dim == env_cls_obs_dim + 1 else "none"


def _make_eval_env(model: ModelParams, spec, batch: int, physics=None):
    probe = make_env(spec, physics=physics, batch_size=1)
    mode = _typing_mode(model, probe.obs_dim)
    env = make_env(spec, physics=physics, batch_size=batch, typing_mode=mode)
    if env.full_obs_dim != model.layout.obs_dim:
        raise EvalConfigError(
            f"observation width mismatch: env {env.full_obs_dim}, "
            f"model {model.layout.obs_dim}")
    return env


def _act(model: ModelParams, obs, adj, rng, use_mean: bool):
    means, log_stds, _ = _policy_forward_np(model, obs, adj)
    if use_mean:
        return means
    return np.stack([sample_action(means[i], log_stds[i], rng)
                     for i in range(len(means))])


def evaluate(model: ModelParams, spec, n_runs: int, noise_magnitude: float = 0.0,
             seed: int = 0, use_mean: bool = True, manifest: dict | None = None,
             physics=None) -> EvalSummary:
    """Mean/std episode reward and success rate over ``n_runs`` episodes."""
    _check_compat(model, manifest, spec)
    if n_runs == 0:
        return EvalSummary(n_runs=0, noise=noise_magnitude)
    env = _make_eval_env(model, spec, n_runs, physics)
    rng = np.random.default_rng(seed)
    _, obs = env.reset(int(rng.integers(2**31 - 1)))
    total = np.zeros(n_runs)
    for _ in range(spec.horizon):
        noisy = inject_noise(obs, noise_magnitude, rng)
        actions = _act(model, noisy, env.graph(), rng, use_mean)
        res = env.step(actions)
        total += res.rewards[0]
        obs = res.observations
    return EvalSummary(
        n_runs=n_runs,
        noise=noise_magnitude,
        mean_reward=float(total.mean()),
        std_reward=float(total.std()) if n_runs > 1 else 0.0,
        success_rate=float(env.success().mean()),
        mean_episode_length=float(spec.horizon),
    )


def noise_sweep(model: ModelParams, spec, levels, n_runs: int, seed: int = 0,
                use_mean: bool = True, anchor: float | None = None,
                manifest: dict | None = None, physics=None) -> NoiseSweepResult:
    """Evaluate at each noise level; rewards normalized by the anchor.

    The anchor defaults to this model's own noise-0 mean reward; pass the
    better model's value when comparing two models on one scale.
    """
    levels = [float(x) for x in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("noise levels must be strictly increasing")
    summaries = [evaluate(model, spec, n_runs, lvl, seed=seed + k,
                          use_mean=use_mean, manifest=manifest, physics=physics)
                 for k, lvl in enumerate(levels)]
    if anchor is None:
        if levels and levels[0] == 0.0:
            anchor = summaries[0].mean_reward
        else:
            anchor = evaluate(model, spec, n_runs, 0.0, seed=seed,
                              use_mean=use_mean, physics=physics).mean_reward
    if anchor <= 0:
        raise EvalConfigError("normalization anchor must be positive")
    return NoiseSweepResult(
        levels=levels,
        mean_norm=[float(np.clip(s.mean_reward / anchor, 0.0, 1.0)) for s in summaries],
        std_norm=[float(max(s.std_reward, 0.0) / anchor) for s in summaries],
        mean_raw=[s.mean_reward for s in summaries],
        std_raw=[s.std_reward for s in summaries],
        anchor=float(anchor),
    )


def vector_field(model: ModelParams, spec, v_min: float = -1.0, v_max: float = 1.0,
                 resolution: int = 21, manifest: dict | None = None) -> VectorFieldTable:
    """Team mean-action field over the two agents' velocities (Scenario A).

    Positions are pinned at the origin; each grid cell is the observation
    pair ((0, v1), (0, v2)).
    """
    _check_compat(model, manifest, spec)
    if spec.scenario_id != "A":
        raise EvalConfigError("vector fields are defined for Scenario A only")
    if resolution == 1:
        vs = np.array([(v_min + v_max) / 2.0])
    else:
        vs = np.linspace(v_min, v_max, resolution)
    v1, v2 = np.meshgrid(vs, vs, indexing="ij")
    v1, v2 = v1.ravel(), v2.ravel()
    B = len(v1)
    obs = np.zeros((2, B, model.layout.obs_dim))
    obs[0, :, 1] = v1
    obs[1, :, 1] = v2
    if model.layout.obs_dim == 3:     # explicit agent index
        obs[1, :, 2] = 1.0
    adj = np.broadcast_to(~np.eye(2, dtype=bool), (B, 2, 2)).copy()
    means, _, _ = _policy_forward_np(model, obs, adj)
    return VectorFieldTable(v1=v1, v2=v2, f1=means[0][:, 0], f2=means[1][:, 0],
                            resolution=resolution)


def rollout_trace(model: ModelParams, spec, seed: int = 0, noise: float = 0.0,
                  use_mean: bool = True, manifest: dict | None = None,
                  physics=None) -> RolloutTrace:
    """Full single-episode trace: states, pre/post-noise obs, actions, rewards."""
    _check_compat(model, manifest, spec)
    env = _make_eval_env(model, spec, 1, physics)
    rng = np.random.default_rng(seed)
    _, obs = env.reset(int(rng.integers(2**31 - 1)))
    trace = RolloutTrace()
    for t in range(spec.horizon):
        noisy = inject_noise(obs, noise, rng)
        actions = _act(model, noisy, env.graph(), rng, use_mean)
        world = env.world
        rec = {
            "t": t,
            "positions": world.positions[0].tolist(),
            "velocities": world.velocities[0].tolist(),
            "obs_pre": obs[:, 0].tolist(),
            "obs_post": noisy[:, 0].tolist(),
            "actions": actions[:, 0].tolist(),
        }
        res = env.step(actions)
        rec["reward"] = float(res.rewards[0, 0])
        if spec.scenario_id == "B":
            rec["task_completion"] = float(env.task_completion(env.world)[0])
        trace.records.append(rec)
        obs = res.observations
    trace.success = bool(env.success()[0]) if spec.horizon > 0 else False
    return trace
