"""Passage tasks: two linked robots crossing a gap-bearing wall.

``passage_sizes``: robots of different sizes, two gaps at a fixed spacing.
The bar must cross parallel to the wall (one robot per gap, the big robot
through the big gap) and then park on a horizontal goal pose above.

``passage_asym``: identical robots, a single gap, and an off-center point
mass on the bar.  The bar crosses single-file, perpendicular to the wall,
then reaches a goal pose at an arbitrary rotation.

Both use a shared two-phase delta-shaped reward: before crossing, progress
is measured against (passage center, crossing orientation); after crossing,
against the goal pose.  Collisions are always penalized.
"""

from __future__ import annotations

import numpy as np

from ..physics import RigidLink, StaticGeometry, WorldState
from .base import BaseEnv
from .spec import ScenarioSpec

WALL_THICKNESS = 0.02


def wall_with_gaps(extent: float, gap_centers: np.ndarray,
                   gap_widths: np.ndarray) -> np.ndarray:
    """Horizontal wall along y=0 from -extent to extent, minus the gaps.

    Gaps must lie strictly inside the wall and not overlap, so the segment
    count is always n_gaps + 1.  Returns (n_gaps + 1, 5) rows.
    """
    edges = sorted(
        (float(c - w / 2), float(c + w / 2)) for c, w in zip(gap_centers, gap_widths)
    )
    segs = []
    x = -extent
    for lo, hi in edges:
        if not (x < lo and hi < extent):
            raise ValueError("gap outside the wall or overlapping another gap")
        segs.append((x, 0.0, lo, 0.0, WALL_THICKNESS))
        x = hi
    segs.append((x, 0.0, extent, 0.0, WALL_THICKNESS))
    return np.array(segs)


def orientation_error(direction: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Angle between an unoriented bar direction and a target axis, in [0, pi/2]."""
    d = direction / np.linalg.norm(direction, axis=-1, keepdims=True)
    t = target / np.linalg.norm(target, axis=-1, keepdims=True)
    c = np.abs(np.sum(d * t, axis=-1))
    return np.arccos(np.clip(c, -1.0, 1.0))


def reward_passage(prev: WorldState, nxt: WorldState, env: "PassageEnv") -> np.ndarray:
    """Delta-shaped shared reward; the phase is selected by the post-step state."""
    crossed = env._crossed | (link_center(nxt)[:, 1] > 0)
    err_prev = env.pose_error(prev, crossed)
    err_next = env.pose_error(nxt, crossed)
    r = env.spec.pos_reward_scale * (err_prev - err_next)
    return r + env._shared_collision_penalty(nxt, penalize_walls=True)


def link_center(world: WorldState) -> np.ndarray:
    return world.positions.mean(axis=-2)


def link_direction(world: WorldState) -> np.ndarray:
    return world.positions[..., 0, :] - world.positions[..., 1, :]


class PassageEnv(BaseEnv):
    act_dim = 2
    pos_slice = slice(0, 2)
    vel_slice = slice(2, 4)

    n_gaps: int  # set by subclass

    def __init__(self, spec: ScenarioSpec, **kwargs):
        super().__init__(spec, **kwargs)
        self.obs_dim = 4 + 2 * self.n_gaps + 4   # p, v, gap rels, goal rel, goal dir
        # per-episode context, filled by _spawn
        self.gap_centers: np.ndarray | None = None   # (B, n_gaps)
        self.goal_center: np.ndarray | None = None   # (B, 2)
        self.goal_dir: np.ndarray | None = None      # (B, 2) unit
        self._crossed: np.ndarray | None = None      # (B,) latch

    def crossing_dir(self) -> np.ndarray:
        """Required bar axis while crossing, (2,)."""
        raise NotImplementedError

    def passage_center(self) -> np.ndarray:
        """(B, 2) target point on the wall plane."""
        raise NotImplementedError

    def pose_error(self, world: WorldState, crossed: np.ndarray) -> np.ndarray:
        """Scalar pose error per batch element for the active phase."""
        center = link_center(world)
        direction = link_direction(world)
        w = self.spec.orientation_weight
        pre = (np.linalg.norm(center - self.passage_center(), axis=-1)
               + w * orientation_error(direction, self.crossing_dir()[None, :]))
        post = (np.linalg.norm(center - self.goal_center, axis=-1)
                + w * orientation_error(direction, self.goal_dir))
        return np.where(crossed, post, pre)

    def _observe(self, world: WorldState, agent: int) -> np.ndarray:
        p = world.positions[:, agent]
        v = world.velocities[:, agent]
        parts = [p, v]
        for g in range(self.n_gaps):
            gap = np.stack([self.gap_centers[:, g], np.zeros(self.batch_size)], axis=1)
            parts.append(gap - p)
        parts.append(self.goal_center - p)
        parts.append(self.goal_dir)
        return np.concatenate(parts, axis=1)

    def _reward(self, prev, forces, nxt):
        r = reward_passage(prev, nxt, self)
        self._crossed = self._crossed | (link_center(nxt)[:, 1] > 0)
        return r

    def _goal_distances(self, world: WorldState) -> np.ndarray:
        d = np.linalg.norm(link_center(world) - self.goal_center, axis=-1)
        return np.broadcast_to(d[:, None], (self.batch_size, self.n_agents)).copy()

    def _success(self, world: WorldState) -> np.ndarray:
        center_ok = (np.linalg.norm(link_center(world) - self.goal_center, axis=-1)
                     <= self.spec.goal_tolerance)
        orient_ok = (orientation_error(link_direction(world), self.goal_dir)
                     <= self.spec.orientation_tolerance)
        return self._crossed & center_ok & orient_ok

    def _base_world(self, positions: np.ndarray, statics: StaticGeometry,
                    link: RigidLink) -> WorldState:
        s, n = self.spec, self.spec.n_agents
        return WorldState(
            positions=positions,
            velocities=np.zeros_like(positions),
            masses=np.array(s.masses),
            radii=np.array(s.radii),
            max_force=np.full(n, s.max_force),
            max_speed=np.full(n, s.max_speed),
            statics=statics,
            links=(link,),
        )


class PassageSizes(PassageEnv):
    n_gaps = 2

    def __init__(self, spec: ScenarioSpec, **kwargs):
        assert spec.scenario_id == "passage_sizes"
        super().__init__(spec, **kwargs)

    def crossing_dir(self) -> np.ndarray:
        return np.array([1.0, 0.0])   # bar parallel to the wall

    def passage_center(self) -> np.ndarray:
        mid = self.gap_centers.mean(axis=1)
        return np.stack([mid, np.zeros(self.batch_size)], axis=1)

    def _spawn(self, rng: np.random.Generator) -> WorldState:
        s, B = self.spec, self.batch_size
        we, sp = s.wall_extent, s.gap_spacing
        margin = max(s.gap_widths) / 2 + 0.1
        lo, hi = -we + margin, we - margin - sp
        left = rng.uniform(lo, hi, size=B)
        order = rng.integers(0, 2, size=B)          # which gap is leftmost
        g0 = np.where(order == 0, left, left + sp)  # big gap center
        g1 = np.where(order == 0, left + sp, left)  # small gap center
        self.gap_centers = np.stack([g0, g1], axis=1)

        # team below the wall, bar perpendicular to it; random vertical order
        xs = rng.uniform(lo, hi + sp, size=B)
        yc = -s.spawn_depth
        flip = rng.integers(0, 2, size=B) * 2 - 1
        off = np.stack([np.zeros(B), flip * s.link_length / 2], axis=1)
        center = np.stack([xs, np.full(B, yc)], axis=1)
        positions = np.stack([center + off, center - off], axis=1)

        gx = rng.uniform(-we + margin, we - margin, size=B)
        self.goal_center = np.stack([gx, np.full(B, s.spawn_depth)], axis=1)
        self.goal_dir = np.broadcast_to(np.array([1.0, 0.0]), (B, 2)).copy()
        self._crossed = np.zeros(B, dtype=bool)

        statics = StaticGeometry(np.stack([
            wall_with_gaps(we, self.gap_centers[b], np.array(s.gap_widths))
            for b in range(B)
        ]))
        link = RigidLink(0, 1, s.link_length, s.link_point_mass,
                         s.link_point_mass_offset)
        return self._base_world(positions, statics, link)


class PassageAsym(PassageEnv):
    n_gaps = 1

    def __init__(self, spec: ScenarioSpec, **kwargs):
        assert spec.scenario_id == "passage_asym"
        super().__init__(spec, **kwargs)

    def crossing_dir(self) -> np.ndarray:
        return np.array([0.0, 1.0])   # bar perpendicular to the wall

    def passage_center(self) -> np.ndarray:
        return np.stack([self.gap_centers[:, 0], np.zeros(self.batch_size)], axis=1)

    def _spawn(self, rng: np.random.Generator) -> WorldState:
        s, B = self.spec, self.batch_size
        we = s.wall_extent
        margin = s.gap_widths[0] / 2 + 0.1
        self.gap_centers = rng.uniform(-we + margin, we - margin, size=(B, 1))

        xs = rng.uniform(-we + margin, we - margin, size=B)
        theta = rng.uniform(0, 2 * np.pi, size=B)
        flip = rng.integers(0, 2, size=B) * 2 - 1
        axis = np.stack([np.cos(theta), np.sin(theta)], axis=1) * flip[:, None]
        center = np.stack([xs, np.full(B, -s.spawn_depth)], axis=1)
        off = axis * s.link_length / 2
        positions = np.stack([center + off, center - off], axis=1)

        gx = rng.uniform(-we + margin, we - margin, size=B)
        gth = rng.uniform(0, 2 * np.pi, size=B)
        self.goal_center = np.stack([gx, np.full(B, s.spawn_depth)], axis=1)
        self.goal_dir = np.stack([np.cos(gth), np.sin(gth)], axis=1)
        self._crossed = np.zeros(B, dtype=bool)

        statics = StaticGeometry(np.stack([
            wall_with_gaps(we, self.gap_centers[b], np.array(s.gap_widths))
            for b in range(B)
        ]))
        link = RigidLink(0, 1, s.link_length, s.link_point_mass,
                         s.link_point_mass_offset)
        return self._base_world(positions, statics, link)
