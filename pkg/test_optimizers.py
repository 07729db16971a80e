"""
位置优化器测试：解析梯度、GD步、BF探测、URA目标与分配
"""

import itertools

import numpy as np
import pytest

from experiments.scenario import build_geometry, build_scenario, sample_initial_positions
from mimo.channel import (NORMALIZE_COLUMN, NORMALIZE_UNIT, ArrayGeometry, build_channel,
                          inverse_condition_number)
from mimo.optimizers import (PROBE_LABELS, BfParams, DegenerateBoresightException, GdParams,
                             GradientUndefinedException, OptimizerException, assign_targets,
                             assignment_cost, bf_probe_set, bf_select, decayed_step, gd_step,
                             gradient, plan_ura, ura_spacing, ura_targets)


def _objective_extended(geom, rx, amplitude):
    """扩展精度的目标函数，作为有限差分的参照

    f 只依赖同一接收端到两根发射天线的距离差，用平方差公式直接计算距离差，
    避免千米量级距离相减时的相位精度损失。
    """
    tx = geom.tx_positions.astype(np.longdouble)
    rx = np.asarray(rx, dtype=np.longdouble)
    dist = np.sqrt(np.sum((rx[:, None, :] - tx[None, :, :]) ** 2, axis=2))
    # d_nk − d_n0 = (p_k − p_0)·(p_k + p_0 − 2q_n) / (d_nk + d_n0)
    num = np.sum((tx - tx[0])[None, :, :] * ((tx + tx[0])[None, :, :] - 2 * rx[:, None, :]), axis=2)
    phase = np.longdouble(geom.wavenumber) * num / (dist + dist[:, :1])
    E = np.cos(phase) - 1j * np.sin(phase)
    G = E.conj().T @ E
    off = ~np.eye(G.shape[0], dtype=bool)
    return np.sum(np.abs(G[off]) ** 2) * np.longdouble(amplitude) ** 4


def _finite_difference(geom, m, h, amplitude):
    grad = np.zeros(3)
    step = np.longdouble(h)
    for axis in range(3):
        shifted = []
        for sign in (1, -1):
            rx = geom.rx_positions.astype(np.longdouble)
            rx[m, axis] += sign * step
            shifted.append(_objective_extended(geom, rx, amplitude))
        grad[axis] = float((shifted[0] - shifted[1]) / (2 * step))
    return grad


class TestGradient:

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_difference_short_range(self, seed):
        scenario = build_scenario(cube_side_m=4.0, range_m=20.0)
        rng = np.random.default_rng(seed)
        geom = build_geometry(scenario, sample_initial_positions(scenario, rng))
        H = build_channel(geom).normalized(NORMALIZE_COLUMN)
        for m in (0, 7, 15):
            analytic = gradient(geom.rx_positions[m], geom, H, m)
            numeric = _finite_difference(geom, m, 1e-6, H.amplitude)
            assert np.linalg.norm(analytic - numeric) < 1e-5 * np.linalg.norm(analytic)

    def test_matches_finite_difference_reference_range(self, reference_scenario):
        for seed in range(100):
            rng = np.random.default_rng(100 + seed)
            geom = build_geometry(reference_scenario, sample_initial_positions(reference_scenario, rng))
            H = build_channel(geom).normalized(NORMALIZE_UNIT)
            m = seed % geom.n_rx
            analytic = gradient(geom.rx_positions[m], geom, H, m)
            numeric = _finite_difference(geom, m, 1e-6, H.amplitude)
            assert np.linalg.norm(analytic - numeric) < 1e-5 * np.linalg.norm(analytic), seed

    def test_physical_amplitude(self):
        scenario = build_scenario(cube_side_m=4.0, range_m=20.0)
        geom = build_geometry(scenario, sample_initial_positions(scenario, np.random.default_rng(3)))
        H = build_channel(geom)
        analytic = gradient(geom.rx_positions[2], geom, H, 2)
        numeric = _finite_difference(geom, 2, 1e-6, H.amplitude)
        assert np.linalg.norm(analytic - numeric) < 1e-5 * np.linalg.norm(analytic)

    def test_single_antenna_has_zero_gradient(self):
        geom = ArrayGeometry([[0.0, 0.0, 0.0]], [[10.0, 1.0, 0.0], [10.0, -1.0, 0.0]], 0.005, 10.0)
        H = build_channel(geom)
        np.testing.assert_array_equal(gradient(geom.rx_positions[0], geom, H, 0), np.zeros(3))

    def test_drone_at_antenna(self):
        geom = ArrayGeometry([[0.0, 0.0, 0.0], [0.0, 0.25, 0.0]],
                             [[10.0, 1.0, 0.0], [10.0, -1.0, 0.0]], 0.005, 10.0)
        H = build_channel(geom)
        with pytest.raises(GradientUndefinedException):
            gradient(np.array([0.0, 0.25, 0.0]), geom, H, 0)


class TestGdStep:

    def test_step_scaled_by_decay(self):
        params = GdParams(step=0.05, decay=0.999)
        grad = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(gd_step(grad, params, 0), -0.05 * grad)
        np.testing.assert_allclose(gd_step(grad, params, 10), -0.05 * 0.999 ** 10 * grad)

    def test_zero_gradient(self):
        np.testing.assert_array_equal(gd_step(np.zeros(3), GdParams(), 5), np.zeros(3))

    def test_negative_iteration(self):
        with pytest.raises(OptimizerException):
            decayed_step(0.3, 0.999, -1)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            GdParams(step=0.0)
        with pytest.raises(ValueError):
            BfParams(decay=1.5)


class TestProbes:

    def test_probe_set(self):
        probes = bf_probe_set()
        assert probes.shape == (7, 3)
        assert len(PROBE_LABELS) == 7
        np.testing.assert_array_equal(probes[0], np.zeros(3))
        np.testing.assert_allclose(np.linalg.norm(probes[1:], axis=1), 1.0)
        np.testing.assert_array_equal(probes[1] + probes[2], np.zeros(3))

    def test_select_minimum(self):
        assert bf_select([5, 4, 3, 2, 1, 0.5, 0.7]) == 5

    def test_ties_prefer_staying(self):
        assert bf_select([1, 1, 1, 1, 1, 1, 1]) == 0
        assert bf_select([2, 1, 1, 3, 3, 3, 3]) == 1

    def test_select_validates_input(self):
        with pytest.raises(OptimizerException):
            bf_select([1, 2, 3])
        with pytest.raises(OptimizerException):
            bf_select([1, 2, 3, 4, 5, 6, float("nan")])


class TestUra:

    def test_rayleigh_spacing(self):
        assert ura_spacing(0.005, 1000.0, 4, 0.25) == pytest.approx(5.0)

    def test_spacing_uses_receive_counts(self):
        tx = [[0.0, 0.0, 0.0], [0.0, 0.25, 0.0]]
        rx = [[1000.0, y, z] for z in (-1.0, 1.0) for y in (-3.0, -1.0, 1.0, 3.0)]
        geom = ArrayGeometry(tx, rx, 0.005, 1.0)
        plan = ura_targets(geom, (2, 4), 0.25)

        distance = np.linalg.norm(geom.rx_positions.mean(axis=0) - geom.tx_positions.mean(axis=0))
        assert np.linalg.norm(plan.targets[1] - plan.targets[0]) == pytest.approx(
            ura_spacing(0.005, distance, 4, 0.25))
        assert np.linalg.norm(plan.targets[4] - plan.targets[0]) == pytest.approx(
            ura_spacing(0.005, distance, 2, 0.25))

    def test_targets_form_grid(self, reference_scenario, rng):
        geom = build_geometry(reference_scenario, sample_initial_positions(reference_scenario, rng))
        plan = ura_targets(geom, (4, 4), 0.25)
        assert plan.targets.shape == (16, 3)
        np.testing.assert_allclose(plan.targets.mean(axis=0), geom.rx_positions.mean(axis=0), atol=1e-9)

        centroid = geom.rx_positions.mean(axis=0)
        boresight = centroid / np.linalg.norm(centroid)
        np.testing.assert_allclose((plan.targets - centroid) @ boresight, 0.0, atol=1e-9)

        distance = np.linalg.norm(centroid)
        spacing = ura_spacing(geom.wavelength, distance, 4, 0.25)
        assert np.linalg.norm(plan.targets[1] - plan.targets[0]) == pytest.approx(spacing)
        assert np.linalg.norm(plan.targets[4] - plan.targets[0]) == pytest.approx(spacing)

    def test_targets_are_orthogonal(self, reference_scenario):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            geom = build_geometry(reference_scenario, sample_initial_positions(reference_scenario, rng))
            plan = plan_ura(geom, (4, 4), 0.25)
            H = build_channel(geom.with_rx(plan.targets))
            assert inverse_condition_number(H) >= 0.99

    def test_wrong_side_counts(self, reference_scenario, rng):
        geom = build_geometry(reference_scenario, sample_initial_positions(reference_scenario, rng))
        with pytest.raises(OptimizerException):
            ura_targets(geom, (3, 4), 0.25)

    def test_centroid_at_base_station(self):
        tx = [[0.0, 0.0, 0.0], [0.0, 0.25, 0.0]]
        geom = ArrayGeometry(tx, [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], 0.005, 1.0)
        geom.tx_positions = geom.tx_positions - geom.tx_positions.mean(axis=0)
        with pytest.raises(DegenerateBoresightException):
            ura_targets(geom, (1, 2), 0.25)

    def test_plan_without_assignment(self, reference_scenario, rng):
        geom = build_geometry(reference_scenario, sample_initial_positions(reference_scenario, rng))
        plan = ura_targets(geom, (4, 4), 0.25)
        with pytest.raises(OptimizerException):
            plan.target_of(0)


class TestAssignment:

    def test_matches_exhaustive_search(self, rng):
        for _ in range(20):
            current = rng.uniform(-10, 10, size=(6, 3))
            targets = rng.uniform(-10, 10, size=(6, 3))
            perm = assign_targets(current, targets)
            best = min(assignment_cost(current, targets, p) for p in itertools.permutations(range(6)))
            assert sorted(perm) == list(range(6))
            assert assignment_cost(current, targets, perm) == pytest.approx(best, rel=1e-12)

    def test_identity_when_already_in_place(self, rng):
        targets = rng.uniform(-10, 10, size=(5, 3))
        np.testing.assert_array_equal(assign_targets(targets, targets), np.arange(5))

    def test_size_mismatch(self, rng):
        with pytest.raises(OptimizerException):
            assign_targets(rng.uniform(size=(3, 3)), rng.uniform(size=(4, 3)))
