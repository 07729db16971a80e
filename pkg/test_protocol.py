"""
协议测试：误差注入、路程统计、GD / BF / URA 迭代流程与停止条件
"""

import numpy as np
import pytest

from experiments.scenario import build_geometry, sample_initial_positions, transmit_positions
from experiments.schema import ErrorModel
from flow.flows import ProtocolException, execute_run, run_algorithm, run_bf, run_gd, run_ura
from flow.world import (SwarmWorld, apply_actuation, meets_criterion, measure_csi,
                        observe_position)
from mimo.channel import ArrayGeometry, ChannelMatrix, build_channel, inverse_condition_number
from mimo.optimizers import GradientUndefinedException, assignment_cost, plan_ura


def _single_drone_world():
    return SwarmWorld(ArrayGeometry([[0.0, 0.0, 0.0]], [[10.0, 0.0, 0.0]], 0.005, 10.0))


class CountingObserver:
    def __init__(self):
        self.calls = 0

    def __call__(self, true_pos, err, rng):
        self.calls += 1
        return observe_position(true_pos, err, rng)


class TestWorld:

    def test_measure_csi_uses_true_positions(self, reference_scenario, rng):
        world = SwarmWorld(build_geometry(reference_scenario, sample_initial_positions(reference_scenario, rng)))
        world.believed_rx += 3.0
        H = measure_csi(world)
        np.testing.assert_array_equal(H.entries, build_channel(world.geom).entries)
        np.testing.assert_array_equal(measure_csi(world).entries, H.entries)

    def test_observe_without_error(self, rng):
        pos = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(observe_position(pos, ErrorModel(), rng), pos)

    def test_observe_statistics(self, rng):
        err = ErrorModel(sigma_loc_m=0.01)
        pos = np.array([1.0, 2.0, 3.0])
        samples = np.array([observe_position(pos, err, rng) for _ in range(100_000)])
        std = samples.std(axis=0)
        np.testing.assert_allclose(std, 0.01, rtol=0.02)

    def test_observe_reproducible(self):
        err = ErrorModel(sigma_loc_m=0.5)
        pos = np.zeros(3)
        a = observe_position(pos, err, np.random.default_rng(9))
        b = observe_position(pos, err, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_exact_move(self, rng):
        world = _single_drone_world()
        apply_actuation(world, 0, np.array([1.0, 0.0, 0.0]), ErrorModel(), rng)
        np.testing.assert_array_equal(world.true_rx[0], [11.0, 0.0, 0.0])
        assert world.traveled[0] == pytest.approx(1.0)

    def test_zero_command_does_nothing(self):
        world = _single_drone_world()
        rng = np.random.default_rng(5)
        apply_actuation(world, 0, np.zeros(3), ErrorModel(sigma_act_m=1.0), rng)
        np.testing.assert_array_equal(world.true_rx[0], [10.0, 0.0, 0.0])
        assert world.traveled[0] == 0.0
        # 没有消耗随机数
        assert rng.standard_normal() == np.random.default_rng(5).standard_normal()

    def test_actuation_error_statistics(self, rng):
        sigma = 0.05
        world = _single_drone_world()
        err = ErrorModel(sigma_act_m=sigma)
        command = np.array([1.0, 0.0, 0.0])
        landing = np.empty(100_000)
        for i in range(len(landing)):
            before = world.true_rx[0].copy()
            apply_actuation(world, 0, command, err, rng)
            landing[i] = np.linalg.norm(world.true_rx[0] - before - command)
        # 三维高斯的径向均值 σ·2·sqrt(2/π)
        assert landing.mean() == pytest.approx(sigma * 2 * np.sqrt(2 / np.pi), rel=0.02)

    def test_traveled_dominates_displacement(self, rng):
        world = _single_drone_world()
        err = ErrorModel(sigma_act_m=0.1)
        previous = 0.0
        for _ in range(50):
            apply_actuation(world, 0, rng.uniform(-1, 1, size=3), err, rng)
            assert world.traveled[0] >= previous
            assert world.traveled[0] >= world.net_displacement()[0] - 1e-12
            previous = world.traveled[0]


class TestCriterion:

    def test_above_threshold(self):
        H = ChannelMatrix(np.diag([1.0, 0.96]))
        assert meets_criterion(H, 0.95)

    def test_inclusive_boundary(self, random_channel):
        H = ChannelMatrix(random_channel(4, 3))
        assert meets_criterion(H, inverse_condition_number(H))

    def test_below_threshold(self):
        assert not meets_criterion(ChannelMatrix(np.diag([1.0, 0.5])), 0.95)

    def test_zero_alpha_always_met(self):
        assert meets_criterion(ChannelMatrix(np.ones((3, 2))), 0.0)


class TestGradientDescent:

    def test_converges_on_small_swarm(self, small_scenario):
        traces = run_gd(small_scenario, np.random.default_rng(small_scenario.seed))
        assert traces[-1].icn >= small_scenario.alpha
        assert len(traces) < small_scenario.max_iterations
        assert [t.iteration for t in traces] == list(range(1, len(traces) + 1))

    def test_deterministic(self, small_scenario):
        scenario = small_scenario.with_updates(sigma_loc_m=1e-3, sigma_act_m=1e-3, max_iterations=30)
        first = run_gd(scenario, np.random.default_rng(11))
        second = run_gd(scenario, np.random.default_rng(11))
        assert [t.model_dump() for t in first] == [t.model_dump() for t in second]

    def test_positions_estimated_once_per_iteration(self, small_scenario):
        observer = CountingObserver()
        scenario = small_scenario.with_updates(alpha=1.0, max_iterations=5)
        traces = run_gd(scenario, np.random.default_rng(1), observer=observer)
        assert len(traces) == 5
        assert observer.calls == 5 * scenario.n_rx

    def test_zero_alpha_stops_after_first_iteration(self, small_scenario):
        traces = run_gd(small_scenario.with_updates(alpha=0.0), np.random.default_rng(2))
        assert len(traces) == 1

    def test_iteration_cap(self, small_scenario):
        shared = execute_run(small_scenario.with_updates(alpha=1.0, max_iterations=4), np.random.default_rng(3))
        assert len(shared["traces"]) == 4
        assert not shared["converged"]
        assert shared["status"] == "exhausted"

    def test_decayed_step_recorded(self, small_scenario):
        scenario = small_scenario.with_updates(alpha=1.0, max_iterations=3, gd_decay=0.5)
        traces = run_gd(scenario, np.random.default_rng(4))
        assert [t.step_m for t in traces] == pytest.approx([1e-3, 5e-4, 2.5e-4])

    def test_objective_settles_without_errors(self, small_scenario):
        scenario = small_scenario.with_updates(alpha=1.0, max_iterations=120)
        objectives = np.array([t.objective for t in run_gd(scenario, np.random.default_rng(13))])
        tail = objectives[len(objectives) // 2:]
        assert np.all(np.diff(tail) <= 1e-12)

    def test_reference_step_moves_drones(self, reference_scenario):
        # 单位模归一化下 b_GD = 0.05 的第一次扫描移动约数米
        scenario = reference_scenario.with_updates(alpha=1.0, max_iterations=1)
        traces = run_gd(scenario, np.random.default_rng(0))
        assert traces[0].mean_traveled_m > 0.5

    def test_drone_at_antenna_fails_run(self, small_scenario):
        tx = transmit_positions(small_scenario)
        initial = np.array([tx[0], [20.0, 0.0, 0.0]])
        with pytest.raises(ProtocolException) as excinfo:
            run_gd(small_scenario, np.random.default_rng(0), initial_positions=initial)
        assert isinstance(excinfo.value.__cause__, GradientUndefinedException)

    def test_wrong_algorithm(self, small_scenario):
        with pytest.raises(ProtocolException):
            run_bf(small_scenario, np.random.default_rng(0))


class TestBruteForce:

    @pytest.fixture
    def bf_scenario(self, small_scenario):
        return small_scenario.with_updates(algorithm="bf", max_iterations=500)

    def test_converges_on_small_swarm(self, bf_scenario):
        traces = run_bf(bf_scenario, np.random.default_rng(bf_scenario.seed))
        assert traces[-1].icn >= bf_scenario.alpha

    def test_never_reads_positions(self, bf_scenario):
        observer = CountingObserver()
        scenario = bf_scenario.with_updates(sigma_loc_m=0.1, max_iterations=10)
        run_bf(scenario, np.random.default_rng(0), observer=observer)
        assert observer.calls == 0

    def test_objective_never_increases_without_actuation_error(self, bf_scenario):
        scenario = bf_scenario.with_updates(alpha=1.0, max_iterations=60)
        traces = run_bf(scenario, np.random.default_rng(8))
        objectives = np.array([t.objective for t in traces])
        assert np.all(np.diff(objectives) <= 1e-9 * max(objectives[0], 1.0))

    def test_distance_per_iteration_bounded(self, bf_scenario):
        scenario = bf_scenario.with_updates(alpha=1.0, max_iterations=20)
        traces = run_bf(scenario, np.random.default_rng(6))
        previous = np.zeros(scenario.n_rx)
        for trace in traces:
            current = np.array(trace.per_drone_traveled_m)
            assert np.all(current - previous <= 13 * trace.step_m + 1e-9)
            previous = current

    def test_localization_error_has_no_effect(self, bf_scenario):
        clean = run_bf(bf_scenario.with_updates(max_iterations=15), np.random.default_rng(2))
        noisy = run_bf(bf_scenario.with_updates(max_iterations=15, sigma_loc_m=0.3), np.random.default_rng(2))
        assert [t.model_dump() for t in clean] == [t.model_dump() for t in noisy]


class TestUra:

    def test_orthogonal_after_one_iteration(self, reference_scenario):
        scenario = reference_scenario.with_updates(algorithm="ura")
        rng = np.random.default_rng(21)
        initial = sample_initial_positions(scenario, np.random.default_rng(21))
        shared = execute_run(scenario, rng)

        traces = shared["traces"]
        assert len(traces) == 1
        assert traces[0].icn >= 0.99

        plan = plan_ura(build_geometry(scenario, initial), scenario.ura_side_counts, scenario.tx_spacing_m)
        cost = assignment_cost(initial, plan.targets, plan.assignment)
        assert shared["world"].traveled.sum() == pytest.approx(cost, rel=1e-12)

    def test_localization_error_costs_distance(self, reference_scenario):
        base = reference_scenario.with_updates(algorithm="ura", max_iterations=3, alpha=1.0)
        clean_total = noisy_total = 0.0
        for seed in range(20):
            clean = execute_run(base, np.random.default_rng(seed))
            noisy = execute_run(base.with_updates(sigma_loc_m=0.05), np.random.default_rng(seed))
            clean_total += clean["world"].traveled.sum()
            noisy_total += noisy["world"].traveled.sum()
        assert noisy_total > clean_total

    def test_run_algorithm_dispatch(self, reference_scenario):
        scenario = reference_scenario.with_updates(algorithm="ura")
        assert len(run_algorithm(scenario, np.random.default_rng(1))) == len(run_ura(scenario, np.random.default_rng(1)))


class TestTraceProperties:

    @pytest.mark.parametrize("algorithm", ["gd", "bf"])
    def test_mf_dominates_and_icn_in_range(self, small_scenario, algorithm):
        scenario = small_scenario.with_updates(algorithm=algorithm, max_iterations=40, alpha=1.0,
                                               sigma_act_m=1e-3)
        for trace in run_algorithm(scenario, np.random.default_rng(5)):
            assert 0.0 <= trace.icn <= 1.0
            assert trace.sinr_mf_db >= max(trace.sinr_zf_db, trace.sinr_nv_db) - 1e-6
            assert trace.mean_traveled_m >= trace.mean_net_displacement_m - 1e-12


class TestSharedStore:

    def test_run_store_contents(self, small_scenario):
        shared = execute_run(small_scenario.with_updates(alpha=1.0, max_iterations=2), np.random.default_rng(0))
        assert "initial_csi" in shared
        assert "ura_targets" not in shared
        assert shared.get("ura_targets", 3) == 3
        assert shared["iteration"] == 2
        assert "world" in repr(shared)
