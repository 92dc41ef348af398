"""Scenario A: two robots of different mass on a line.

The team is rewarded collectively for the highest speed in the team minus
the energy spent, so the optimal division of labor is for the heavy robot
to stay put while the light one drives at the speed cap.
"""

from __future__ import annotations

import numpy as np

from ..physics import WorldState
from .base import BaseEnv
from .spec import ScenarioSpec


def reward_scenario_a(prev: WorldState, forces: np.ndarray, nxt: WorldState,
                      energy_coeff: float) -> np.ndarray:
    """Shared reward: max team speed minus energy term, (batch,).

    forces: (..., n, 2) as applied after clamping.
    """
    speed = np.linalg.norm(nxt.velocities, axis=-1)        # (..., n)
    energy = np.sum(forces**2, axis=(-1, -2))              # sum |f_i|^2
    return speed.max(axis=-1) - energy_coeff * energy


class ScenarioA(BaseEnv):
    obs_dim = 2          # (x position, x velocity)
    act_dim = 1          # force along the line
    pos_slice = slice(0, 1)
    vel_slice = slice(1, 2)

    def __init__(self, spec: ScenarioSpec, **kwargs):
        assert spec.scenario_id == "A"
        super().__init__(spec, **kwargs)

    def _spawn(self, rng: np.random.Generator) -> WorldState:
        s, B, n = self.spec, self.batch_size, self.spec.n_agents
        x = rng.uniform(-s.workspace_halfwidth, s.workspace_halfwidth, size=(B, n))
        pos = np.stack([x, np.zeros_like(x)], axis=-1)
        return WorldState(
            positions=pos,
            velocities=np.zeros((B, n, 2)),
            masses=np.array(s.masses),
            radii=np.array(s.radii),
            max_force=np.full(n, s.max_force),
            max_speed=np.full(n, s.max_speed),
            collidable=False,   # point robots on a line; contacts are irrelevant here
        )

    def _actions_to_forces(self, actions: np.ndarray) -> np.ndarray:
        f = np.moveaxis(actions, 0, 1)                     # (B, n, 1)
        return np.concatenate([f, np.zeros_like(f)], axis=-1)

    def _observe(self, world: WorldState, agent: int) -> np.ndarray:
        return np.stack([world.positions[:, agent, 0],
                         world.velocities[:, agent, 0]], axis=1)

    def _reward(self, prev, forces, nxt):
        return reward_scenario_a(prev, forces, nxt, self.spec.energy_coeff)
