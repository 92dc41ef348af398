"""Declarative scenario descriptions and their defaults.

Four two-robot tasks:

* ``A``            — 1D speed task, two robots of different mass, collective
                     reward for team top speed minus energy spent.
* ``B``            — narrow corridor with two central recesses; the robots
                     start in front of each other's goal and must swap ends,
                     which forces one of them to give way.
* ``passage_sizes``— two robots of different sizes joined by a rigid bar must
                     cross a two-gap wall (big robot through the big gap) and
                     park the bar on a goal pose.
* ``passage_asym`` — physically identical robots, bar with an off-center
                     point mass, single gap: cross single-file and reach a
                     rotated goal pose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SCENARIOS = ("A", "B", "passage_sizes", "passage_asym")


class ScenarioConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    n_agents: int = 2
    horizon: int = 100
    comm_range: float = np.inf

    # per-agent physical attributes
    masses: tuple[float, ...] = (1.0, 1.0)
    radii: tuple[float, ...] = (0.1, 0.1)
    max_force: float = 1.0
    max_speed: float = 1.0

    # geometry (meters); which fields apply depends on the scenario
    workspace_halfwidth: float = 1.0     # A: spawn range on the line
    corridor_length: float = 2.0         # B
    corridor_width: float = 0.3          # B
    recess_size: float = 0.3             # B: square recess side
    goal_radius: float = 0.05            # B / passage success tolerance
    wall_extent: float = 1.5             # passage: wall half-length
    gap_widths: tuple[float, ...] = (0.5, 0.3)   # passage_sizes
    gap_spacing: float = 0.5             # passage_sizes: distance between gap centers
    link_length: float = 0.5             # passage link rest length
    link_point_mass: float = 0.0         # passage_asym
    link_point_mass_offset: float = 0.25
    spawn_depth: float = 0.8             # passage: spawn/goal distance from wall

    # reward parameters
    energy_coeff: float = 0.1            # A
    pos_reward_scale: float = 1.0        # B / passage delta shaping
    final_reward: float = 0.05           # B: per-step bonus while both on goal
    collision_penalty: float = 0.1       # per agent per colliding contact
    orientation_weight: float = 0.5      # passage: weight of orientation error
    curriculum_threshold_frac: float = 0.8  # B: fraction of straight-line max

    # success tolerances
    goal_tolerance: float = 0.05
    orientation_tolerance: float = 0.1   # rad

    def __post_init__(self):
        if self.scenario_id not in SCENARIOS:
            raise ScenarioConfigError(f"unknown scenario {self.scenario_id!r}")
        if self.n_agents != 2:
            raise ScenarioConfigError("all scenarios are two-agent tasks")
        if self.horizon <= 0:
            raise ScenarioConfigError("horizon must be positive")
        if len(self.masses) != self.n_agents or len(self.radii) != self.n_agents:
            raise ScenarioConfigError("need one mass and radius per agent")
        if any(m <= 0 for m in self.masses) or any(r <= 0 for r in self.radii):
            raise ScenarioConfigError("masses and radii must be positive")
        if self.scenario_id == "B":
            r = self.radii[0]
            # corridor admits exactly one robot abreast
            if not (2 * r <= self.corridor_width < 4 * r):
                raise ScenarioConfigError(
                    "corridor must fit exactly one robot abreast: "
                    f"need 2r <= width < 4r, got width={self.corridor_width}, r={r}")
            if self.recess_size < 2 * r:
                raise ScenarioConfigError("recess too small for a robot")
        if self.scenario_id == "passage_sizes":
            if self.gap_widths[0] <= 2 * self.radii[0] or self.gap_widths[1] <= 2 * self.radii[1]:
                raise ScenarioConfigError("each robot must fit through its gap")
        if self.scenario_id == "passage_asym":
            if self.gap_widths[0] <= 2 * max(self.radii):
                raise ScenarioConfigError("gap too small for the robots")


def default_spec(scenario_id: str, **overrides) -> ScenarioSpec:
    """Scenario defaults; keyword overrides win."""
    base: dict = {"scenario_id": scenario_id}
    if scenario_id == "A":
        base.update(
            horizon=100,
            masses=(4.0, 1.0),
            radii=(0.05, 0.05),
            max_force=1.0,
            max_speed=1.0,
            workspace_halfwidth=1.0,
            energy_coeff=0.1,
        )
    elif scenario_id == "B":
        base.update(
            horizon=500,
            masses=(1.0, 1.0),
            radii=(0.12, 0.12),
            max_force=1.0,
            max_speed=0.5,
            corridor_length=2.0,
            corridor_width=0.3,
            recess_size=0.3,
            goal_radius=0.05,
            pos_reward_scale=1.0,
            final_reward=0.05,
            collision_penalty=0.02,
        )
    elif scenario_id == "passage_sizes":
        base.update(
            horizon=300,
            masses=(2.0, 1.0),
            radii=(0.16, 0.08),
            max_force=1.0,
            max_speed=0.5,
            wall_extent=1.5,
            gap_widths=(0.5, 0.3),
            gap_spacing=0.5,
            link_length=0.5,
            spawn_depth=0.8,
            collision_penalty=0.02,
        )
    elif scenario_id == "passage_asym":
        base.update(
            horizon=300,
            masses=(1.0, 1.0),
            radii=(0.1, 0.1),
            max_force=1.0,
            max_speed=0.5,
            wall_extent=1.5,
            gap_widths=(0.36, 0.36),
            link_length=0.5,
            link_point_mass=1.0,
            link_point_mass_offset=0.25,
            spawn_depth=0.8,
            collision_penalty=0.02,
        )
    else:
        raise ScenarioConfigError(f"unknown scenario {scenario_id!r}")
    base.update(overrides)
    return ScenarioSpec(**base)
