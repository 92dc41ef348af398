"""Environment base: batched episode loop, observation plumbing, comm graphs.

Every scenario env steps a batch of independent worlds in lockstep (all four
tasks are fixed-horizon, so the batch shares one episode clock).  Single-env
use is just ``batch_size=1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..physics import PhysicsParams, WorldState, penetrations, step_world
from .spec import ScenarioSpec

TYPING_MODES = ("none", "explicit_index")


class EnvStateError(RuntimeError):
    """Raised when stepping a finished or unreset environment."""


@dataclass
class StepResult:
    observations: np.ndarray   # (n_agents, batch, obs_dim)
    rewards: np.ndarray        # (n_agents, batch) — identical across agents here
    done: bool                 # batch shares the episode clock
    info: dict                 # success (batch,), collision counts, goal distances


def comm_graph(world: WorldState, comm_range: float) -> np.ndarray:
    """Adjacency mask (..., n, n): edge iff distance <= range, no self loops."""
    p = world.positions
    d = np.linalg.norm(p[..., :, None, :] - p[..., None, :, :], axis=-1)
    adj = d <= comm_range
    n = world.n_agents
    idx = np.arange(n)
    adj[..., idx, idx] = False
    return adj


class BaseEnv:
    """Shared episode machinery; scenarios implement spawn/observe/reward."""

    # subclasses set these
    obs_dim: int
    act_dim: int
    pos_slice: slice   # own-position entries within the observation
    vel_slice: slice   # own-velocity entries

    def __init__(self, spec: ScenarioSpec, physics: PhysicsParams | None = None,
                 batch_size: int = 1, typing_mode: str = "none"):
        if typing_mode not in TYPING_MODES:
            raise ValueError(f"unknown typing mode {typing_mode!r}")
        self.spec = spec
        self.physics = physics or PhysicsParams()
        self.batch_size = batch_size
        self.typing_mode = typing_mode
        self.world: WorldState | None = None
        self.t = 0
        self._done = True
        self.curriculum_on = False  # scenario B; owned by the trainer

    # ------------------------------------------------------------ interface

    @property
    def n_agents(self) -> int:
        return self.spec.n_agents

    @property
    def full_obs_dim(self) -> int:
        return self.obs_dim + (1 if self.typing_mode == "explicit_index" else 0)

    def set_curriculum(self, on: bool) -> None:
        # latch: never turns back off within a batch
        self.curriculum_on = self.curriculum_on or on

    def reset(self, seed: int):
        rng = np.random.default_rng(seed)
        self.world = self._spawn(rng)
        self.t = 0
        self._done = False
        return self.world, self.observe_all()

    def observe(self, agent: int) -> np.ndarray:
        """Observation rows for one agent, (batch, full_obs_dim)."""
        obs = self._observe(self.world, agent)
        if self.typing_mode == "explicit_index":
            idx = np.full((obs.shape[0], 1), float(agent))
            obs = np.concatenate([obs, idx], axis=1)
        if not np.all(np.isfinite(obs)):
            raise FloatingPointError("non-finite observation")
        return obs

    def observe_all(self) -> np.ndarray:
        return np.stack([self.observe(i) for i in range(self.n_agents)])

    def graph(self) -> np.ndarray:
        return comm_graph(self.world, self.spec.comm_range)

    def step(self, actions: np.ndarray) -> StepResult:
        """actions: (n_agents, batch, act_dim), clamped here to max_force."""
        if self._done or self.world is None:
            raise EnvStateError("env is done; call reset()")
        forces = self._actions_to_forces(np.asarray(actions, dtype=np.float64))
        prev = self.world
        self.world = step_world(prev, forces, self.physics)
        self.t += 1
        rewards = self._reward(prev, forces, self.world)   # (batch,)
        self._done = self.t >= self.spec.horizon or self._terminal(self.world)
        success = self._success(self.world) if self._done else np.zeros(self.batch_size, bool)
        agent_hit, wall_hit = penetrations(self.world)
        info = {
            "success": success,
            "agent_collisions": agent_hit.sum(axis=-1),
            "wall_collisions": wall_hit.sum(axis=-1),
            "goal_distances": self._goal_distances(self.world),
        }
        info.update(self._extra_info())
        shared = np.broadcast_to(rewards, (self.n_agents, self.batch_size)).copy()
        return StepResult(self.observe_all(), shared, self._done, info)

    @property
    def done(self) -> bool:
        return self._done

    def success(self) -> np.ndarray:
        if not self._done:
            raise EnvStateError("success() is defined on finished episodes")
        return self._success(self.world)

    # -------------------------------------------------- scenario extension

    def _spawn(self, rng: np.random.Generator) -> WorldState:
        raise NotImplementedError

    def _observe(self, world: WorldState, agent: int) -> np.ndarray:
        raise NotImplementedError

    def _reward(self, prev: WorldState, forces: np.ndarray,
                nxt: WorldState) -> np.ndarray:
        raise NotImplementedError

    def _actions_to_forces(self, actions: np.ndarray) -> np.ndarray:
        """Default: 2D force per agent, transposed to (batch, n, 2)."""
        return np.moveaxis(actions, 0, 1)

    def _terminal(self, world: WorldState) -> bool:
        return False

    def _success(self, world: WorldState) -> np.ndarray:
        return np.zeros(self.batch_size, dtype=bool)

    def _goal_distances(self, world: WorldState) -> np.ndarray:
        return np.full((self.batch_size, self.n_agents), np.nan)

    def _extra_info(self) -> dict:
        return {}

    # ------------------------------------------------------------- helpers

    def _shared_collision_penalty(self, world: WorldState,
                                  penalize_walls: bool) -> np.ndarray:
        """Summed per-contact penalty, shared by the team, (batch,)."""
        agent_hit, wall_hit = penetrations(world)
        count = agent_hit.sum(axis=-1).astype(np.float64)
        if penalize_walls:
            count = count + wall_hit.sum(axis=-1)
        return -self.spec.collision_penalty * count
