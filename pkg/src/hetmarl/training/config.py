"""Training hyperparameters and the desk/paper profiles.

The ``paper`` profile carries the published large-scale settings; ``desk``
is a CPU-friendly configuration for reproduction runs on a workstation.
Worker counts are local parallelism knobs here: the rollout batch holds
n_env_workers * envs_per_worker environments stepped in lockstep.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

PROFILES = ("desk", "paper")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4096          # env steps per iteration (all envs combined)
    minibatch_size: int = 512
    sgd_iters: int = 8
    lr: float = 3e-4
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.9
    entropy_coeff: float = 0.0
    kl_coeff: float = 0.01
    kl_target: float = 0.01
    value_coeff: float = 0.5
    grad_clip: float = 0.5
    n_env_workers: int = 2
    envs_per_worker: int = 8
    episodes_per_iteration: int = 0  # if > 0, overrides batch_size
    iterations: int = 100
    checkpoint_every: int = 50
    seed: int = 0
    sharing_mode: str = "per_agent"
    typing_mode: str = "none"
    obs_noise_train: float = 0.0
    bootstrap_truncation: bool = True  # critic value at horizon cut-offs

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be positive")
        if self.minibatch_size > self.batch_size:
            raise ValueError("minibatch_size must not exceed batch_size")

    @property
    def total_envs(self) -> int:
        workers = self.n_env_workers
        cap = os.environ.get("HETMARL_THREADS")
        if cap:
            workers = min(workers, max(1, int(cap)))
        return workers * self.envs_per_worker


# published large-scale settings
PAPER_PROFILE = dict(
    batch_size=60000,
    minibatch_size=4096,
    sgd_iters=40,
    lr=5e-5,
    clip_epsilon=0.2,
    gamma=0.99,
    gae_lambda=0.9,
    entropy_coeff=0.0,
    kl_coeff=0.01,
    kl_target=0.01,
    n_env_workers=5,
    envs_per_worker=50,
)

DESK_PROFILE = dict(
    batch_size=4096,
    minibatch_size=512,
    sgd_iters=8,
    lr=3e-4,
    clip_epsilon=0.2,
    gamma=0.99,
    gae_lambda=0.9,
    entropy_coeff=0.0,
    kl_coeff=0.01,
    kl_target=0.01,
    n_env_workers=2,
    envs_per_worker=8,
)


def apply_profile(config: TrainConfig, profile: str) -> TrainConfig:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    values = PAPER_PROFILE if profile == "paper" else DESK_PROFILE
    return replace(config, **values)
