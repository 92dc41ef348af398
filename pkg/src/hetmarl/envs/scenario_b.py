"""Scenario B: give-way corridor with two central recesses.

Two identical robots start at opposite ends of a corridor wide enough for
one robot, each in front of the other's goal.  The only way to swap ends is
for one robot to tuck into a recess while the other passes.

Reward (shared): the summed per-robot delta in goal distance, a per-step
bonus while both robots sit on their goals, and a constant penalty per
colliding contact.  Contacts with the recess cavity walls are only
penalized once the curriculum latches on; the corridor side walls and end
caps are never penalized.
"""

from __future__ import annotations

import numpy as np

from ..physics import StaticGeometry, WorldState, penetrations
from .base import BaseEnv
from .spec import ScenarioSpec

WALL_THICKNESS = 0.02


def corridor_geometry(spec: ScenarioSpec) -> StaticGeometry:
    """Corridor walls with recess cavities at the midpoint, on both sides."""
    L, W, rs = spec.corridor_length, spec.corridor_width, spec.recess_size
    hx, hy, t = L / 2, W / 2, WALL_THICKNESS
    segs = []
    for sy in (+1.0, -1.0):
        y = sy * hy
        # corridor wall, interrupted by the recess opening
        segs.append((-hx, y, -rs / 2, y, t))
        segs.append((rs / 2, y, hx, y, t))
        # recess cavity: two side walls and a cap
        yc = sy * (hy + rs)
        segs.append((-rs / 2, y, -rs / 2, yc, t))
        segs.append((rs / 2, y, rs / 2, yc, t))
        segs.append((-rs / 2, yc, rs / 2, yc, t))
    # end caps
    segs.append((-hx, -hy, -hx, hy, t))
    segs.append((hx, -hy, hx, hy, t))
    return StaticGeometry(np.array(segs))


def recess_geometry(spec: ScenarioSpec) -> StaticGeometry:
    """Only the recess cavity segments, for the curriculum collision penalty."""
    W, rs, t = spec.corridor_width, spec.recess_size, WALL_THICKNESS
    hy = W / 2
    segs = []
    for sy in (+1.0, -1.0):
        y = sy * hy
        yc = sy * (hy + rs)
        segs.append((-rs / 2, y, -rs / 2, yc, t))
        segs.append((rs / 2, y, rs / 2, yc, t))
        segs.append((-rs / 2, yc, rs / 2, yc, t))
    return StaticGeometry(np.array(segs))


def goal_positions(spec: ScenarioSpec) -> np.ndarray:
    """(n, 2): agent 0's goal at the +x end, agent 1's at the -x end."""
    gx = spec.corridor_length / 2 - 0.2
    return np.array([[gx, 0.0], [-gx, 0.0]])


def reward_scenario_b_parts(prev: WorldState, nxt: WorldState, goals: np.ndarray,
                            spec: ScenarioSpec, curriculum_on: bool):
    """(positional, final, collision) shared components, each (batch,).

    Inter-agent contacts are always penalized; contacts with the recess
    cavity walls only once the curriculum is on.  Other walls (the corridor
    sides and end caps) are never penalized.
    """
    d_prev = np.linalg.norm(prev.positions - goals, axis=-1)   # (B, n)
    d_next = np.linalg.norm(nxt.positions - goals, axis=-1)
    positional = spec.pos_reward_scale * (d_prev - d_next).sum(axis=-1)
    on_goal = np.all(d_next <= spec.goal_radius, axis=-1)
    final = spec.final_reward * on_goal
    agent_hit, recess_hit = penetrations(nxt, wall_geometry=recess_geometry(spec))
    count = agent_hit.sum(axis=-1).astype(np.float64)
    if curriculum_on:
        count = count + recess_hit.sum(axis=-1)
    return positional, final, -spec.collision_penalty * count


def reward_scenario_b(prev: WorldState, nxt: WorldState, goals: np.ndarray,
                      spec: ScenarioSpec, curriculum_on: bool) -> np.ndarray:
    """Shared scalar per batch element."""
    pos, fin, col = reward_scenario_b_parts(prev, nxt, goals, spec, curriculum_on)
    return pos + fin + col


class ScenarioB(BaseEnv):
    obs_dim = 6          # position (2), velocity (2), own-goal relative (2)
    act_dim = 2
    pos_slice = slice(0, 2)
    vel_slice = slice(2, 4)

    def __init__(self, spec: ScenarioSpec, **kwargs):
        assert spec.scenario_id == "B"
        super().__init__(spec, **kwargs)
        self.statics = corridor_geometry(spec)
        self.goals = goal_positions(spec)

    def straight_line_reward(self) -> float:
        """Positional reward of both robots walking straight to their goals."""
        spawn = self.goals[::-1]
        return float(self.spec.pos_reward_scale
                     * np.linalg.norm(spawn - self.goals, axis=-1).sum())

    def _spawn(self, rng: np.random.Generator) -> WorldState:
        s, B, n = self.spec, self.batch_size, self.spec.n_agents
        # each robot starts inside its opponent's goal disk
        base = self.goals[::-1][None, :, :]                    # (1, n, 2)
        ang = rng.uniform(0, 2 * np.pi, size=(B, n))
        rad = s.goal_radius * 0.8 * np.sqrt(rng.uniform(size=(B, n)))
        jitter = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
        jitter[..., 1] = 0.0   # stay on the corridor axis
        return WorldState(
            positions=base + jitter,
            velocities=np.zeros((B, n, 2)),
            masses=np.array(s.masses),
            radii=np.array(s.radii),
            max_force=np.full(n, s.max_force),
            max_speed=np.full(n, s.max_speed),
            statics=self.statics,
        )

    def _observe(self, world: WorldState, agent: int) -> np.ndarray:
        p = world.positions[:, agent]
        v = world.velocities[:, agent]
        goal_rel = self.goals[agent] - p
        return np.concatenate([p, v, goal_rel], axis=1)

    def _reward(self, prev, forces, nxt):
        pos, fin, col = reward_scenario_b_parts(prev, nxt, self.goals, self.spec,
                                                self.curriculum_on)
        self._last_positional = pos
        return pos + fin + col

    def _extra_info(self) -> dict:
        return {"positional_reward": self._last_positional}

    def _goal_distances(self, world: WorldState) -> np.ndarray:
        return np.linalg.norm(world.positions - self.goals, axis=-1)

    def _success(self, world: WorldState) -> np.ndarray:
        return np.all(self._goal_distances(world) <= self.spec.goal_radius, axis=-1)

    def task_completion(self, world: WorldState) -> np.ndarray:
        """Scaled sum of negative goal distances, 1.0 when both on goal."""
        d = self._goal_distances(world).sum(axis=-1)
        d0 = 2 * (self.spec.corridor_length - 0.4)
        return 1.0 - d / d0
