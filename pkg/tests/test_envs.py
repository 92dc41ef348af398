"""Scenario environments: spawns, observations, rewards, comm graphs."""

import numpy as np
import pytest

from hetmarl.envs import default_spec, make_env
from hetmarl.envs.base import EnvStateError, comm_graph
from hetmarl.envs.passage import (
    link_center,
    link_direction,
    orientation_error,
    wall_with_gaps,
)
from hetmarl.envs.scenario_a import reward_scenario_a
from hetmarl.envs.scenario_b import (
    corridor_geometry,
    goal_positions,
    reward_scenario_b,
)
from hetmarl.envs.spec import ScenarioConfigError, ScenarioSpec
from hetmarl.physics import WorldState


def rollout_random(env, seed, steps=None):
    rng = np.random.default_rng(seed + 1)
    env.reset(seed)
    n = steps or env.spec.horizon
    results = []
    for _ in range(n):
        a = rng.uniform(-1, 1, (env.n_agents, env.batch_size, env.act_dim))
        results.append(env.step(a))
        if env.done:
            break
    return results


class TestSpecValidation:
    def test_defaults_construct(self):
        for sid in ("A", "B", "passage_sizes", "passage_asym"):
            default_spec(sid)

    def test_unknown_scenario(self):
        with pytest.raises(ScenarioConfigError):
            ScenarioSpec(scenario_id="C")

    def test_corridor_one_abreast(self):
        # two robots abreast would need width >= 4r
        with pytest.raises(ScenarioConfigError):
            default_spec("B", corridor_width=0.5)
        with pytest.raises(ScenarioConfigError):
            default_spec("B", corridor_width=0.2)

    def test_gap_must_fit_robot(self):
        with pytest.raises(ScenarioConfigError):
            default_spec("passage_sizes", gap_widths=(0.5, 0.1))

    def test_horizon_positive(self):
        with pytest.raises(ScenarioConfigError):
            default_spec("A", horizon=0)


class TestCommGraph:
    @pytest.mark.parametrize("n,B", [(2, 1), (3, 4), (5, 2)])
    def test_matches_pairwise_oracle(self, n, B):
        rng = np.random.default_rng(n * 10 + B)
        w = WorldState(
            positions=rng.uniform(-1, 1, (B, n, 2)),
            velocities=np.zeros((B, n, 2)),
            masses=np.ones(n), radii=np.full(n, 0.1),
            max_force=np.ones(n), max_speed=np.full(n, np.inf))
        r = 0.9
        adj = comm_graph(w, r)
        for b in range(B):
            for i in range(n):
                for j in range(n):
                    expect = (i != j and
                              np.linalg.norm(w.positions[b, i] - w.positions[b, j]) <= r)
                    assert adj[b, i, j] == expect

    def test_infinite_range_is_clique(self):
        env = make_env(default_spec("A"), batch_size=3)
        env.reset(0)
        adj = env.graph()
        assert adj.shape == (3, 2, 2)
        assert np.all(adj == ~np.eye(2, dtype=bool))


class TestScenarioA:
    def test_observation_layout(self):
        env = make_env(default_spec("A"), batch_size=4)
        world, obs = env.reset(3)
        assert obs.shape == (2, 4, 2)
        assert np.array_equal(obs[0, :, 0], world.positions[:, 0, 0])
        assert np.array_equal(obs[1, :, 1], world.velocities[:, 1, 0])

    def test_spawn_on_line_within_workspace(self):
        env = make_env(default_spec("A"), batch_size=64)
        world, _ = env.reset(5)
        assert np.all(world.positions[..., 1] == 0)
        assert np.all(np.abs(world.positions[..., 0]) <= 1.0)
        assert np.all(world.velocities == 0)

    def test_reward_oracle(self):
        # hand-computed: speeds 0.3 and 0.7, forces (0.5, -0.2)
        spec = default_spec("A")
        env = make_env(spec, batch_size=1)
        w = WorldState(
            positions=np.zeros((1, 2, 2)),
            velocities=np.array([[[0.3, 0.0], [0.7, 0.0]]]),
            masses=np.array(spec.masses), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2))
        f = np.array([[[0.5, 0.0], [-0.2, 0.0]]])
        r = reward_scenario_a(w, f, w, spec.energy_coeff)
        assert np.allclose(r, 0.7 - 0.1 * (0.25 + 0.04))

    def test_shared_reward_across_agents(self):
        env = make_env(default_spec("A"), batch_size=3)
        out = rollout_random(env, 0, steps=5)
        for res in out:
            assert np.array_equal(res.rewards[0], res.rewards[1])

    def test_typing_mode_appends_index(self):
        env = make_env(default_spec("A"), batch_size=2, typing_mode="explicit_index")
        _, obs = env.reset(0)
        assert obs.shape == (2, 2, 3)
        assert np.all(obs[0, :, 2] == 0.0)
        assert np.all(obs[1, :, 2] == 1.0)

    def test_step_after_done_raises(self):
        env = make_env(default_spec("A", horizon=2), batch_size=1)
        rollout_random(env, 0)
        with pytest.raises(EnvStateError):
            env.step(np.zeros((2, 1, 1)))

    def test_determinism(self):
        a = rollout_random(make_env(default_spec("A"), batch_size=2), 9, steps=10)
        b = rollout_random(make_env(default_spec("A"), batch_size=2), 9, steps=10)
        for x, y in zip(a, b):
            assert np.array_equal(x.observations, y.observations)
            assert np.array_equal(x.rewards, y.rewards)


class TestScenarioB:
    def test_goals_near_corridor_ends(self):
        spec = default_spec("B")
        g = goal_positions(spec)
        assert np.allclose(g, [[0.8, 0.0], [-0.8, 0.0]])

    def test_spawn_in_opponents_goal_disk(self):
        spec = default_spec("B")
        env = make_env(spec, batch_size=128)
        world, _ = env.reset(11)
        g = goal_positions(spec)
        d0 = np.linalg.norm(world.positions[:, 0] - g[1], axis=-1)
        d1 = np.linalg.norm(world.positions[:, 1] - g[0], axis=-1)
        assert np.all(d0 <= spec.goal_radius)
        assert np.all(d1 <= spec.goal_radius)
        assert np.all(world.positions[..., 1] == 0)

    def test_geometry_closes_the_corridor(self):
        spec = default_spec("B")
        geo = corridor_geometry(spec)
        # 5 segments per side (wall x2, recess x3) plus two end caps
        assert geo.segments.shape == (12, 5)

    def test_reward_positional_oracle(self):
        spec = default_spec("B")
        g = goal_positions(spec)

        def world_at(p):
            return WorldState(
                positions=np.asarray(p, float)[None],
                velocities=np.zeros((1, 2, 2)),
                masses=np.ones(2), radii=np.array(spec.radii),
                max_force=np.ones(2), max_speed=np.ones(2))

        prev = world_at([[-0.8, 0.0], [0.8, 0.0]])
        nxt = world_at([[-0.7, 0.0], [0.7, 0.0]])
        r = reward_scenario_b(prev, nxt, g, spec, curriculum_on=False)
        # each robot moved 0.1 toward its goal, no contacts, not on goal
        assert np.allclose(r, 0.2)

    def test_reward_final_bonus_on_goal(self):
        spec = default_spec("B")
        g = goal_positions(spec)
        w = WorldState(
            positions=g[None].copy(),
            velocities=np.zeros((1, 2, 2)),
            masses=np.ones(2), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2))
        r = reward_scenario_b(w, w, g, spec, curriculum_on=False)
        assert np.allclose(r, spec.final_reward)

    def test_curriculum_latch(self):
        env = make_env(default_spec("B"), batch_size=1)
        assert not env.curriculum_on
        env.set_curriculum(True)
        env.set_curriculum(False)
        assert env.curriculum_on

    def test_recess_penalty_only_under_curriculum(self):
        spec = default_spec("B")
        g = goal_positions(spec)
        # robot pressed into the bottom recess cap (cap at y = -0.45)
        w = WorldState(
            positions=np.array([[[0.0, -0.36], [-0.8, 0.0]]]),
            velocities=np.zeros((1, 2, 2)),
            masses=np.ones(2), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2),
            statics=corridor_geometry(spec))
        off = reward_scenario_b(w, w, g, spec, curriculum_on=False)
        on = reward_scenario_b(w, w, g, spec, curriculum_on=True)
        assert on < off

    def test_corridor_wall_contact_never_penalized(self):
        spec = default_spec("B")
        g = goal_positions(spec)
        # robot brushing the corridor side wall away from the recesses
        w = WorldState(
            positions=np.array([[[0.5, 0.05], [-0.8, 0.0]]]),
            velocities=np.zeros((1, 2, 2)),
            masses=np.ones(2), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2),
            statics=corridor_geometry(spec))
        off = reward_scenario_b(w, w, g, spec, curriculum_on=False)
        on = reward_scenario_b(w, w, g, spec, curriculum_on=True)
        assert np.allclose(on, off)

    def test_positional_reward_in_info(self):
        env = make_env(default_spec("B"), batch_size=2)
        res = rollout_random(env, 1, steps=1)[0]
        assert "positional_reward" in res.info
        assert res.info["positional_reward"].shape == (2,)

    def test_task_completion_endpoints(self):
        spec = default_spec("B")
        env = make_env(spec, batch_size=1)
        env.reset(0)
        g = goal_positions(spec)
        done = WorldState(
            positions=g[None].copy(), velocities=np.zeros((1, 2, 2)),
            masses=np.ones(2), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2))
        assert np.allclose(env.task_completion(done), 1.0)
        swapped = WorldState(
            positions=g[::-1][None].copy(), velocities=np.zeros((1, 2, 2)),
            masses=np.ones(2), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2))
        assert np.allclose(env.task_completion(swapped), 0.0)

    def test_straight_line_reward(self):
        env = make_env(default_spec("B"), batch_size=1)
        assert np.isclose(env.straight_line_reward(), 2 * 1.6)


class TestPassageGeometry:
    def test_wall_segment_count_fixed(self):
        segs = wall_with_gaps(1.5, np.array([-0.3, 0.4]), np.array([0.5, 0.3]))
        assert segs.shape == (3, 5)

    def test_gap_clipping_rejected(self):
        with pytest.raises(ValueError):
            wall_with_gaps(1.0, np.array([0.9]), np.array([0.5]))
        with pytest.raises(ValueError):
            wall_with_gaps(1.5, np.array([0.0, 0.1]), np.array([0.5, 0.5]))

    def test_orientation_error_unoriented(self):
        d = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        t = np.broadcast_to(np.array([1.0, 0.0]), (4, 2))
        err = orientation_error(d, t)
        assert np.allclose(err, [0.0, 0.0, np.pi / 2, np.pi / 4])


@pytest.mark.parametrize("sid", ["passage_sizes", "passage_asym"])
class TestPassageEnvs:
    def test_spawn_below_wall_linked(self, sid):
        spec = default_spec(sid)
        env = make_env(spec, batch_size=32)
        world, obs = env.reset(21)
        assert np.all(world.positions[..., 1] < 0)
        lengths = np.linalg.norm(link_direction(world), axis=-1)
        assert np.allclose(lengths, spec.link_length, atol=1e-9)
        assert obs.shape == (2, 32, env.full_obs_dim)

    def test_goal_above_wall(self, sid):
        env = make_env(default_spec(sid), batch_size=16)
        env.reset(2)
        assert np.all(env.goal_center[:, 1] > 0)
        assert np.allclose(np.linalg.norm(env.goal_dir, axis=-1), 1.0)

    def test_step_keeps_link_length(self, sid):
        spec = default_spec(sid)
        env = make_env(spec, batch_size=4)
        rollout_random(env, 4, steps=20)
        lengths = np.linalg.norm(link_direction(env.world), axis=-1)
        assert np.allclose(lengths, spec.link_length, atol=1e-5)

    def test_observation_is_relative(self, sid):
        # gap and goal entries shift with the agent: translation invariant
        env = make_env(default_spec(sid), batch_size=2)
        world, obs = env.reset(8)
        shift = np.array([0.3, -0.2])
        shifted = WorldState(
            positions=world.positions + shift,
            velocities=world.velocities,
            masses=world.masses, radii=world.radii,
            max_force=world.max_force, max_speed=world.max_speed,
            statics=world.statics, links=world.links)
        base = env._observe(world, 0)
        moved = env._observe(shifted, 0)
        # own position moves, relative entries move opposite, goal dir fixed
        assert np.allclose(moved[:, :2] - base[:, :2], shift)
        assert np.allclose(moved[:, 4:-2] - base[:, 4:-2], -shift[None, :].repeat(
            (base.shape[1] - 6) // 2, axis=0).reshape(1, -1))
        assert np.allclose(moved[:, -2:], base[:, -2:])

    def test_crossed_latch(self, sid):
        env = make_env(default_spec(sid), batch_size=1)
        env.reset(0)
        assert not env._crossed[0]
        env.world = WorldState(
            positions=env.world.positions + np.array([0.0, 2.0]),
            velocities=env.world.velocities,
            masses=env.world.masses, radii=env.world.radii,
            max_force=env.world.max_force, max_speed=env.world.max_speed,
            statics=env.world.statics, links=env.world.links)
        env.step(np.zeros((2, 1, 2)))
        assert env._crossed[0]

    def test_shared_reward(self, sid):
        env = make_env(default_spec(sid), batch_size=2)
        for res in rollout_random(env, 13, steps=5):
            assert np.array_equal(res.rewards[0], res.rewards[1])


class TestPassageSizesSpecifics:
    def test_big_gap_listed_first(self):
        env = make_env(default_spec("passage_sizes"), batch_size=64)
        env.reset(30)
        # gap 0 pairs with agent 0 (the big robot); widths (0.5, 0.3)
        assert env.gap_centers.shape == (64, 2)
        spread = np.abs(env.gap_centers[:, 0] - env.gap_centers[:, 1])
        assert np.allclose(spread, 0.5)

    def test_crossing_parallel_to_wall(self):
        env = make_env(default_spec("passage_sizes"), batch_size=1)
        assert np.allclose(env.crossing_dir(), [1.0, 0.0])


class TestPassageAsymSpecifics:
    def test_crossing_perpendicular(self):
        env = make_env(default_spec("passage_asym"), batch_size=1)
        assert np.allclose(env.crossing_dir(), [0.0, 1.0])

    def test_goal_rotation_varies(self):
        env = make_env(default_spec("passage_asym"), batch_size=128)
        env.reset(77)
        angles = np.arctan2(env.goal_dir[:, 1], env.goal_dir[:, 0])
        assert np.std(angles) > 0.5

    def test_point_mass_on_link(self):
        env = make_env(default_spec("passage_asym"), batch_size=1)
        world, _ = env.reset(0)
        (link,) = world.links
        assert link.point_mass == 1.0
        assert link.point_mass_offset == 0.25


def test_pose_error_delta_reward_oracle():
    # one step of pure progress toward the passage center
    spec = default_spec("passage_asym")
    env = make_env(spec, batch_size=1)
    env.reset(0)
    env.gap_centers = np.array([[0.0]])
    env.goal_center = np.array([[0.0, 0.8]])
    env.goal_dir = np.array([[0.0, 1.0]])
    env._crossed = np.zeros(1, dtype=bool)

    def world_at(c):
        off = np.array([0.0, spec.link_length / 2])
        return WorldState(
            positions=np.array([[c + off, c - off]]),
            velocities=np.zeros((1, 2, 2)),
            masses=np.ones(2), radii=np.array(spec.radii),
            max_force=np.ones(2), max_speed=np.ones(2))

    prev = world_at(np.array([0.0, -0.8]))
    nxt = world_at(np.array([0.0, -0.7]))
    e_prev = env.pose_error(prev, np.zeros(1, bool))
    e_next = env.pose_error(nxt, np.zeros(1, bool))
    # bar already aligned with the crossing axis, so pure distance delta
    assert np.allclose(e_prev - e_next, 0.1)
    assert np.allclose(link_center(nxt), [[0.0, -0.7]])
