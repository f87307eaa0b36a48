"""Scenario engine: parser, truth kinematics, sensors, schedule determinism."""

import math

import numpy as np
import pytest

from colocate import lie
from colocate.drivers import CentralDriver, DecoupledDriver
from colocate.errors import ConfigError
from colocate.rng import CounterRng
from colocate.simworld import (
    builtin_scenario_path,
    initial_estimate,
    load_scenario,
    make_initial_truth,
    parse_scenario,
    run_schedule,
    sample_landmark,
    sample_robot,
    sample_velocity,
    step_truth,
)

MINI = """
colocate-scenario v1
name mini
robots 2
duration 1.0
seed 3
rate-velocity-hz 100
rate-landmark-hz 10
rate-robot-hz 5
noise-velocity 0.05
noise-landmark 0.5
noise-robot 0.5
p0-scale 100.0
init-translation-error-m 0.5
init-rotation-error-rad 0.05
trajectory circular-2d
circle-radius 5.0
circle-speed 0.5
circle-center 0 -4.0 0.0 0.0
circle-center 1 4.0 0.0 0.0
circle-phase 1 3.14159265358979
landmark -4.0 0.0 0.0
landmark 4.0 0.0 0.0
observe-landmark 0 0
observe-landmark 1 1
observe-robot 0 1
observe-robot 1 0
"""


def mini_scenario():
    return parse_scenario(MINI)


class TestParser:
    def test_shipped_scenarios_parse(self):
        for name in ("planar_ring", "planar_ring_noisefree", "random_3d"):
            sc = load_scenario(builtin_scenario_path(name))
            assert sc.n == 4
            assert sc.rate_velocity == 100

    def test_header_required(self):
        with pytest.raises(ConfigError):
            parse_scenario("robots 2\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_scenario(MINI + "\nwarp-drive 9\n")

    def test_missing_required_key(self):
        bad = MINI.replace("rate-robot-hz 5", "")
        with pytest.raises(ConfigError):
            parse_scenario(bad)

    def test_misaligned_rates_rejected(self):
        with pytest.raises(ConfigError):
            parse_scenario(MINI.replace("rate-robot-hz 5", "rate-robot-hz 3"))

    def test_self_observation_rejected(self):
        with pytest.raises(ConfigError):
            parse_scenario(MINI.replace("observe-robot 0 1", "observe-robot 0 0"))

    def test_comments_and_filter_noise(self):
        sc = parse_scenario(MINI + "\nfilter-noise-landmark 0.7  # override\n")
        assert sc.filter_C()[0, 0] == 0.7
        # planar runs constrain the filter's velocity noise to the plane
        assert np.array_equal(np.diag(sc.filter_B()),
                              0.05 * np.array([0, 0, 1, 1, 1, 0.0]))

    def test_edge_indices_validated(self):
        with pytest.raises(ConfigError):
            parse_scenario(MINI.replace("observe-landmark 1 1",
                                        "observe-landmark 1 9"))
        with pytest.raises(ConfigError):
            parse_scenario(MINI.replace("observe-robot 1 0",
                                        "observe-robot 1 5"))
        with pytest.raises(ConfigError):
            parse_scenario(MINI.replace("trajectory circular-2d",
                                        "trajectory teleporting"))

    def test_random_3d_requires_start_positions(self):
        text = MINI.replace("trajectory circular-2d", "trajectory random-3d")
        with pytest.raises(ConfigError):
            parse_scenario(text)


class TestTruth:
    def test_zero_twist_keeps_pose(self):
        sc = mini_scenario()
        truth = make_initial_truth(sc)
        truth.twists[:] = 0.0
        stepped = step_truth(truth, sc, 0.01)
        assert np.array_equal(stepped.poses, truth.poses)

    def test_circle_returns_to_start(self):
        sc = mini_scenario()
        truth = make_initial_truth(sc)
        start = truth.poses.copy()
        period = 2.0 * math.pi * sc.circle_radius / sc.circle_speed
        steps = round(period * sc.rate_velocity)
        dt = period / steps
        for _ in range(steps):
            truth = step_truth(truth, sc, dt)
        assert np.abs(truth.poses[:, :3, 3] - start[:, :3, 3]).max() < 1e-6

    def test_planarity_for_all_time(self):
        sc = mini_scenario()
        truth = make_initial_truth(sc)
        for _ in range(500):
            truth = step_truth(truth, sc, 0.01)
            assert np.abs(truth.poses[:, 2, 3]).max() == 0.0
            # rotation keeps the world z axis: no roll or pitch
            assert np.abs(truth.poses[:, 2, :2]).max() == 0.0
            assert np.abs(truth.poses[:, :2, 2]).max() == 0.0

    def test_random_walk_respects_volume(self):
        sc = load_scenario(builtin_scenario_path("random_3d"))
        truth = make_initial_truth(sc)
        rng = CounterRng(9)
        from colocate.simworld import evolve_twists
        for _ in range(3000):
            evolve_twists(truth, sc, 0.01, rng)
            truth = step_truth(truth, sc, 0.01)
        assert np.abs(truth.poses[:, :3, 3]).max() < sc.volume_half_extent + 0.1


class TestSensors:
    def test_velocity_noise_free_is_exact(self):
        sc = mini_scenario()
        sc.noise_velocity = 0.0
        truth = make_initial_truth(sc)
        out = sample_velocity(truth, sc, CounterRng(0))
        for m, twist in zip(out, truth.twists):
            assert np.array_equal(m.u, twist)

    def test_same_seed_bit_exact_stream(self):
        sc = mini_scenario()
        truth = make_initial_truth(sc)
        a = sample_velocity(truth, sc, CounterRng(7))
        b = sample_velocity(truth, sc, CounterRng(7))
        for ma, mb in zip(a, b):
            assert np.array_equal(ma.u, mb.u)

    def test_velocity_noise_is_zero_mean(self):
        # statistical oracle: mean over many draws within 3 sigma / sqrt(N)
        sc = mini_scenario()
        truth = make_initial_truth(sc)
        rng = CounterRng(5)
        n_draws = 100_000
        total = np.zeros(6)
        for _ in range(n_draws // sc.n):
            for m, twist in zip(sample_velocity(truth, sc, rng), truth.twists):
                total += m.u - twist
        mean = total / n_draws
        bound = 3.0 * 0.05 / math.sqrt(n_draws)
        planar_axes = [2, 3, 4]
        assert np.abs(mean[planar_axes]).max() < bound
        assert np.abs(mean[[0, 1, 5]]).max() == 0.0

    def test_robot_noise_covariance(self):
        # sample covariance of z residuals approaches D D' = 0.25 I
        sc = mini_scenario()
        sc.robot_edges = [(0, 1)]
        truth = make_initial_truth(sc)
        rng = CounterRng(6)
        exact = (lie.se3_inverse(truth.poses[0]) @ truth.poses[1]
                 @ lie.bar(np.zeros(3)))[:3]
        draws = np.array([sample_robot(truth, sc, rng)[0].z - exact
                          for _ in range(100_000)])
        cov = draws.T @ draws / draws.shape[0]
        assert abs(cov[0, 0] - 0.25) < 0.0125
        assert abs(cov[1, 1] - 0.25) < 0.0125
        assert cov[2, 2] == 0.0  # planar constraint
        assert abs(cov[0, 1]) < 0.0125

    def test_coincident_zero_noise_measurements(self):
        sc = mini_scenario()
        sc.noise_landmark = 0.0
        sc.noise_robot = 0.0
        truth = make_initial_truth(sc)
        truth.poses[:] = np.eye(4)
        rng = CounterRng(0)
        for m in sample_landmark(truth, sc, rng):
            assert np.allclose(m.y, m.landmark, atol=1e-15)
        for m in sample_robot(truth, sc, rng):
            assert np.allclose(m.z, m.marker, atol=1e-15)

    def test_ring_visibility_pairs(self):
        sc = load_scenario(builtin_scenario_path("planar_ring"))
        truth = make_initial_truth(sc)
        out = sample_robot(truth, sc, CounterRng(1))
        assert [(m.observer, m.observed) for m in out] == \
            [(0, 1), (1, 2), (2, 3), (3, 0)]

    def test_initial_estimate_error_is_exact(self):
        sc = mini_scenario()
        truth = make_initial_truth(sc)
        est = initial_estimate(truth, sc, CounterRng(11))
        for e, t in zip(est, truth.poses):
            assert abs(np.linalg.norm(e[:3, 3] - t[:3, 3]) - 0.5) < 1e-12
            assert abs(lie.rotation_angle(e[:3, :3].T @ t[:3, :3]) - 0.05) < 1e-12


class TestSchedule:
    def test_event_counts_one_second(self):
        sc = mini_scenario()
        res = run_schedule(sc, [CentralDriver(name="c")], duration=1.0)
        kinds = [e.split()[1] for e in res.events]
        assert kinds.count("velocity") == 100
        assert kinds.count("landmark-tick") == 10
        assert kinds.count("robot-tick") == 5
        assert kinds.count("landmark") == 10 * len(sc.landmark_edges)

    def test_same_seed_identical_logs(self):
        sc = mini_scenario()
        r1 = run_schedule(sc, [CentralDriver(name="c")], duration=0.5)
        r2 = run_schedule(sc, [CentralDriver(name="c")], duration=0.5)
        assert r1.events == r2.events
        for a, b in zip(r1.metrics["c"], r2.metrics["c"]):
            assert a == b

    def test_driver_order_does_not_matter(self):
        sc = mini_scenario()
        ab = run_schedule(sc, [CentralDriver(name="a"),
                               DecoupledDriver(name="b")], duration=0.5)
        ba = run_schedule(sc, [DecoupledDriver(name="b"),
                               CentralDriver(name="a")], duration=0.5)
        for name in ("a", "b"):
            for (t1, p1), (t2, p2) in zip(ab.pose_rows[name], ba.pose_rows[name]):
                assert t1 == t2
                assert np.array_equal(p1, p2)

    def test_metrics_rows_increase_in_time(self):
        sc = mini_scenario()
        res = run_schedule(sc, [CentralDriver(name="c")], duration=1.0)
        ts = [r.t for r in res.metrics["c"]]
        assert ts == sorted(ts)
        assert len(ts) == len(set(ts))
        assert ts[0] == 0.0

    def test_noise_free_perfect_init_stays_exact(self):
        sc = load_scenario(builtin_scenario_path("planar_ring_noisefree"))
        res = run_schedule(sc, [CentralDriver(name="c")], duration=3.0)
        worst = max(r.avg_terr_m for r in res.metrics["c"])
        assert worst < 1e-9

    def test_noise_free_error_decreases_over_any_window(self):
        # exact measurements with an imperfect start: updates must pull the
        # average translation error down across every 5 second window
        sc = load_scenario(builtin_scenario_path("planar_ring"))
        sc.noise_velocity = sc.noise_landmark = sc.noise_robot = 0.0
        sc.filter_noise_velocity = 0.05
        sc.filter_noise_landmark = sc.filter_noise_robot = 0.5
        res = run_schedule(sc, [CentralDriver(name="c")], duration=15.0,
                           collect_events=False)
        rows = res.metrics["c"]
        by_t = {round(r.t, 6): r.avg_terr_m for r in rows}
        for r in rows:
            later = by_t.get(round(r.t + 5.0, 6))
            if later is not None:
                assert later < r.avg_terr_m
