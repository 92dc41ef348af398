"""Training loop: collect -> advantages -> update, with metrics and checkpoints.

Writes one CSV row per iteration, checkpoints at the configured cadence (a
``latest`` pointer file tracks the newest), and drives the Scenario B
curriculum from batch statistics: once the exponential moving average of the
batch positional reward crosses the threshold, recess-wall collisions start
being penalized, and the latch never releases.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np

from ..envs import make_env
from ..nn.checkpoint import save_checkpoint
from ..nn.model import ModelConfig, ModelParams, ObsLayout, init_model
from .config import TrainConfig
from .ppo import Adam, TrainMetrics, ppo_update
from .rollout import collect_rollouts

CURRICULUM_EMA = 0.2  # weight of the newest batch in the moving average


class Trainer:
    def __init__(self, spec, config: TrainConfig, out_dir,
                 model_cfg: ModelConfig | None = None, physics=None):
        self.spec = spec
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.physics = physics
        self.env = make_env(spec, physics=physics, batch_size=config.total_envs,
                            typing_mode=config.typing_mode)
        self.rng = np.random.default_rng(config.seed)
        layout = ObsLayout.from_env(self.env)
        self.model_cfg = model_cfg or ModelConfig(sharing_mode=config.sharing_mode)
        self.model: ModelParams = init_model(self.rng, layout, self.model_cfg,
                                             spec.n_agents)
        self.optimizer = Adam()
        self.kl_coeff = config.kl_coeff
        self.history: list[TrainMetrics] = []
        self._pos_reward_ema: float | None = None
        self._curriculum_on = False

    # ------------------------------------------------------------------ io

    @property
    def metrics_path(self) -> Path:
        return self.out_dir / "metrics.csv"

    def _write_metrics_row(self, m: TrainMetrics) -> None:
        new = not self.metrics_path.exists()
        with open(self.metrics_path, "a", newline="") as f:
            w = csv.writer(f)
            if new:
                w.writerow(TrainMetrics.FIELDS)
            w.writerow(m.row())

    def save(self, iteration: int) -> Path:
        path = self.out_dir / f"ck_{iteration:06d}.bin"
        save_checkpoint(path, self.model, self.spec.scenario_id,
                        typing_mode=self.config.typing_mode, iteration=iteration,
                        rng_state=self.rng.bit_generator.state)
        (self.out_dir / "latest").write_text(path.name + "\n")
        return path

    # ------------------------------------------------------------ training

    def _update_curriculum(self, batch) -> None:
        if self.spec.scenario_id != "B" or self._curriculum_on:
            return
        mean_pos = float(batch.episode_pos_reward.mean())
        if self._pos_reward_ema is None:
            self._pos_reward_ema = mean_pos
        else:
            self._pos_reward_ema = ((1 - CURRICULUM_EMA) * self._pos_reward_ema
                                    + CURRICULUM_EMA * mean_pos)
        threshold = (self.spec.curriculum_threshold_frac
                     * self.env.straight_line_reward())
        if self._pos_reward_ema >= threshold:
            self._curriculum_on = True

    def run(self, iterations: int | None = None,
            stop_fn=None) -> list[TrainMetrics]:
        """Train; ``stop_fn(metrics)`` may end the run early (e.g. solved)."""
        iters = self.config.iterations if iterations is None else iterations
        start = self.history[-1].iteration if self.history else 0
        if start == 0:
            self.save(0)
        for it in range(start + 1, start + iters + 1):
            t0 = time.perf_counter()
            self.env.curriculum_on = self._curriculum_on
            batch = collect_rollouts(self.model, self.env, self.config, self.rng)
            batch.compute_advantages(self.config.gamma, self.config.gae_lambda)
            metrics, self.kl_coeff = ppo_update(
                batch, self.model, self.config, self.optimizer, self.rng,
                self.kl_coeff)
            self._update_curriculum(batch)
            metrics.iteration = it
            metrics.wall_time_s = time.perf_counter() - t0
            self.history.append(metrics)
            self._write_metrics_row(metrics)
            if self.config.checkpoint_every > 0 and it % self.config.checkpoint_every == 0:
                self.save(it)
            if stop_fn is not None and stop_fn(metrics):
                break
        self.save(self.history[-1].iteration if self.history else 0)
        return self.history


def train(spec, config: TrainConfig, out_dir, model_cfg=None, physics=None,
          stop_fn=None) -> Trainer:
    """Convenience wrapper: build a Trainer and run it to completion."""
    trainer = Trainer(spec, config, out_dir, model_cfg=model_cfg, physics=physics)
    trainer.run(stop_fn=stop_fn)
    return trainer
