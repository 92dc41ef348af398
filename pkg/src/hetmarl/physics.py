"""Deterministic 2D rigid-circle dynamics for batches of independent worlds.

Bodies are circles with linear friction, optional drag, penalty-spring
contacts against other circles and wall segments, and rigid distance links
solved by positional projection.  All state arrays carry an optional leading
batch dimension so many independent worlds step in one vectorized call.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "AgentBody",
    "StaticGeometry",
    "RigidLink",
    "WorldState",
    "PhysicsParams",
    "step_world",
    "collision_forces",
    "solve_links",
]

LINK_TOL = 1e-6  # post-projection residual bound on |p_a - p_b| - rest_length


class PhysicsError(ValueError):
    """Invalid physical state or parameters (non-finite, degenerate, ...)."""


@dataclass(frozen=True)
class AgentBody:
    position: np.ndarray          # (2,) m
    velocity: np.ndarray          # (2,) m/s
    mass: float                   # kg
    radius: float                 # m
    max_force: float              # N
    max_speed: float = np.inf     # m/s
    shape_tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=np.float64))
        if not (self.mass > 0 and self.radius > 0 and self.max_force > 0):
            raise PhysicsError("mass, radius and max_force must be positive")


@dataclass(frozen=True)
class StaticGeometry:
    """Wall segments: rows of (ax, ay, bx, by, thickness).

    Shape (S, 5), or (B, S, 5) when each world in a batch has its own walls.
    """

    segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 5)))

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=np.float64)
        if seg.ndim == 1:
            seg = seg.reshape(-1, 5)
        if seg.ndim not in (2, 3) or seg.shape[-1] != 5:
            raise PhysicsError("segments must have shape (S, 5) or (B, S, 5)")
        flat = seg.reshape(-1, 5)
        if flat.shape[0]:
            if np.any(flat[:, 4] <= 0):
                raise PhysicsError("wall thickness must be positive")
            if np.any(np.all(flat[:, 0:2] == flat[:, 2:4], axis=1)):
                raise PhysicsError("wall endpoints must be distinct")
        object.__setattr__(self, "segments", seg)

    @property
    def n_segments(self) -> int:
        return self.segments.shape[-2]


@dataclass(frozen=True)
class RigidLink:
    agent_a: int
    agent_b: int
    rest_length: float
    point_mass: float = 0.0
    point_mass_offset: float = 0.5  # fraction along the link from a to b

    def __post_init__(self):
        if self.agent_a == self.agent_b:
            raise PhysicsError("link endpoints must be distinct agents")
        if not self.rest_length > 0:
            raise PhysicsError("rest_length must be positive")
        if self.point_mass < 0 or not 0.0 <= self.point_mass_offset <= 1.0:
            raise PhysicsError("invalid link point mass")


@dataclass(frozen=True)
class WorldState:
    """Snapshot of one world (or a batch, if arrays have a leading axis).

    positions/velocities: (..., n, 2); masses/radii/max_force/max_speed: (n,).
    """

    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    radii: np.ndarray
    max_force: np.ndarray
    max_speed: np.ndarray
    statics: StaticGeometry = field(default_factory=StaticGeometry)
    links: tuple[RigidLink, ...] = ()
    time: int = 0
    shape_tags: tuple[str, ...] = ()
    collidable: bool = True  # agent-agent contacts active

    @classmethod
    def from_agents(cls, agents, statics=None, links=(), time=0, collidable=True):
        return cls(
            positions=np.stack([a.position for a in agents]),
            velocities=np.stack([a.velocity for a in agents]),
            masses=np.array([a.mass for a in agents], dtype=np.float64),
            radii=np.array([a.radius for a in agents], dtype=np.float64),
            max_force=np.array([a.max_force for a in agents], dtype=np.float64),
            max_speed=np.array([a.max_speed for a in agents], dtype=np.float64),
            statics=statics or StaticGeometry(),
            links=tuple(links),
            time=time,
            shape_tags=tuple(a.shape_tag for a in agents),
            collidable=collidable,
        )

    @property
    def n_agents(self) -> int:
        return self.positions.shape[-2]

    @property
    def agents(self) -> list[AgentBody]:
        if self.positions.ndim != 2:
            raise ValueError("agents view only valid for a single world")
        tags = self.shape_tags or ("",) * self.n_agents
        return [
            AgentBody(self.positions[i], self.velocities[i], self.masses[i],
                      self.radii[i], self.max_force[i], self.max_speed[i], tags[i])
            for i in range(self.n_agents)
        ]


@dataclass(frozen=True)
class PhysicsParams:
    dt: float = 0.1
    linear_friction: float = 0.25   # velocity-opposing deceleration, m/s^2
    drag: float = 0.0               # kg/s, velocity-proportional
    collision_stiffness: float = 100.0  # N/m penalty spring
    max_acceleration: float = np.inf    # m/s^2

    def __post_init__(self):
        if not self.dt > 0:
            raise PhysicsError("dt must be positive")
        if self.linear_friction < 0 or self.drag < 0:
            raise PhysicsError("friction and drag must be non-negative")
        if not self.collision_stiffness > 0:
            raise PhysicsError("collision_stiffness must be positive")


def _point_segment_delta(points: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Vector from the closest point on segment ``seg`` to each point.

    points: (..., 2); seg: (..., 5) rows (ax, ay, bx, by, thickness),
    broadcasting against points.  Returns (..., 2).
    """
    a, b = seg[..., 0:2], seg[..., 2:4]
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.clip(np.sum((points - a) * ab, axis=-1) / denom, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return points - closest


def collision_forces(world: WorldState, stiffness: float) -> np.ndarray:
    """Penalty-spring contact forces, one 2-vector per agent.

    Linear spring: magnitude stiffness * penetration along the contact
    normal, equal and opposite for agent-agent pairs.
    """
    p = world.positions
    r = world.radii
    forces = np.zeros_like(p)
    n = world.n_agents
    if world.collidable:
        for i in range(n):
            for j in range(i + 1, n):
                d = p[..., i, :] - p[..., j, :]
                dist = np.linalg.norm(d, axis=-1)
                pen = (r[i] + r[j]) - dist
                active = pen > 0
                if not np.any(active):
                    continue
                safe = np.where(dist > 1e-12, dist, 1.0)
                normal = d / safe[..., None]
                f = stiffness * np.where(active, pen, 0.0)[..., None] * normal
                forces[..., i, :] += f
                forces[..., j, :] -= f
    for k in range(world.statics.n_segments):
        seg = world.statics.segments[..., k, :]
        half = seg[..., 4] / 2.0
        for i in range(n):
            d = _point_segment_delta(p[..., i, :], seg)
            dist = np.linalg.norm(d, axis=-1)
            pen = (r[i] + half) - dist
            active = pen > 0
            if not np.any(active):
                continue
            safe = np.where(dist > 1e-12, dist, 1.0)
            normal = d / safe[..., None]
            forces[..., i, :] += stiffness * np.where(active, pen, 0.0)[..., None] * normal
    return forces


def penetrations(world: WorldState, include_walls: bool = True,
                 wall_geometry: StaticGeometry | None = None):
    """Contact indicator per agent: (agent_contacts, wall_contacts) booleans.

    Shapes (..., n).  Used by scenario rewards to count colliding contacts.
    ``wall_geometry`` restricts the wall check to a subset of segments
    (e.g. only the recess cavities); it defaults to ``world.statics``.
    """
    p = world.positions
    r = world.radii
    n = world.n_agents
    agent_hit = np.zeros(p.shape[:-1], dtype=bool)
    wall_hit = np.zeros(p.shape[:-1], dtype=bool)
    if world.collidable:
        for i in range(n):
            for j in range(i + 1, n):
                d = np.linalg.norm(p[..., i, :] - p[..., j, :], axis=-1)
                hit = d < (r[i] + r[j])
                agent_hit[..., i] |= hit
                agent_hit[..., j] |= hit
    if include_walls:
        statics = world.statics if wall_geometry is None else wall_geometry
        for k in range(statics.n_segments):
            seg = statics.segments[..., k, :]
            half = seg[..., 4] / 2.0
            for i in range(n):
                d = np.linalg.norm(_point_segment_delta(p[..., i, :], seg), axis=-1)
                wall_hit[..., i] |= d < (r[i] + half)
    return agent_hit, wall_hit


def _link_weights(world: WorldState, link: RigidLink) -> tuple[float, float]:
    """Inverse effective masses at the two endpoints, point mass lumped in."""
    ma = world.masses[link.agent_a] + link.point_mass * (1.0 - link.point_mass_offset)
    mb = world.masses[link.agent_b] + link.point_mass * link.point_mass_offset
    return 1.0 / ma, 1.0 / mb


def solve_links(world: WorldState) -> WorldState:
    """Project linked agents back to rest_length; zero axial relative velocity.

    Corrections split inversely to effective endpoint mass.
    """
    if not world.links:
        return world
    p = world.positions.copy()
    v = world.velocities.copy()
    for link in world.links:
        a, b = link.agent_a, link.agent_b
        wa, wb = _link_weights(world, link)
        d = p[..., a, :] - p[..., b, :]
        dist = np.linalg.norm(d, axis=-1)
        if np.any(dist < 1e-12):
            raise PhysicsError("degenerate link: coincident endpoints")
        axis = d / dist[..., None]
        err = dist - link.rest_length
        corr = err / (wa + wb)
        p[..., a, :] -= (wa * corr)[..., None] * axis
        p[..., b, :] += (wb * corr)[..., None] * axis
        rel = np.sum((v[..., a, :] - v[..., b, :]) * axis, axis=-1)
        lam = rel / (wa + wb)
        v[..., a, :] -= (wa * lam)[..., None] * axis
        v[..., b, :] += (wb * lam)[..., None] * axis
    return replace(world, positions=p, velocities=v)


def step_world(world: WorldState, forces: np.ndarray,
               params: PhysicsParams) -> WorldState:
    """Advance one timestep with semi-implicit Euler.

    Order: clamp applied force, add contact forces, integrate velocity,
    apply friction (never reversing velocity within the step), cap speed,
    integrate position, then project link constraints.
    """
    forces = np.asarray(forces, dtype=np.float64)
    if forces.shape != world.positions.shape:
        raise PhysicsError("one 2-vector force per agent required")
    if not (np.all(np.isfinite(forces)) and np.all(np.isfinite(world.positions))
            and np.all(np.isfinite(world.velocities))):
        raise PhysicsError("non-finite force or state")

    # clamp applied force norm to max_force
    norm = np.linalg.norm(forces, axis=-1)
    cap = world.max_force
    scale = np.where(norm > cap, cap / np.where(norm > 0, norm, 1.0), 1.0)
    f = forces * scale[..., None]

    f = f + collision_forces(world, params.collision_stiffness)
    acc = f / world.masses[..., None]
    if params.drag > 0:
        acc = acc - params.drag * world.velocities / world.masses[..., None]
    if np.isfinite(params.max_acceleration):
        anorm = np.linalg.norm(acc, axis=-1)
        ascale = np.where(anorm > params.max_acceleration,
                          params.max_acceleration / np.where(anorm > 0, anorm, 1.0),
                          1.0)
        acc = acc * ascale[..., None]

    v = world.velocities + acc * params.dt
    if params.linear_friction > 0:
        speed = np.linalg.norm(v, axis=-1)
        drop = params.linear_friction * params.dt
        new_speed = np.maximum(speed - drop, 0.0)
        v = v * np.where(speed > 0, new_speed / np.where(speed > 0, speed, 1.0), 0.0)[..., None]

    speed = np.linalg.norm(v, axis=-1)
    cap = world.max_speed
    v = v * np.where(speed > cap, cap / np.where(speed > 0, speed, 1.0), 1.0)[..., None]

    p = world.positions + v * params.dt
    out = replace(world, positions=p, velocities=v, time=world.time + 1)
    return solve_links(out)
