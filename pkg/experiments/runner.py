#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 试验运行
单次试验、蒙特卡洛集合与误差扫描

第 i 次试验使用种子 base_seed + i。并行时用进程池的有序 map 收集结果，
因此聚合结果与进程数无关。
"""

import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from config import ICN_DISTANCE_THRESHOLDS, MC_WORKERS, PROGRESS_LOG_EVERY
from experiments.scenario import ScenarioConfigException, scenario_manifest
from experiments.schema import (Algorithm, IterationTrace, Scenario, SweepAxis, SweepResult,
                                SweepRow, TrialSummary)
from flow.flows import execute_run
from mimo.channel import capacity, inverse_condition_number, max_capacity
from mimo.combining import METHOD_NV, METHOD_ZF, stream_report, sum_rate
from utils.logging import disable_file_logging, get_logger, log_function_call
from utils.progress import TrialProgress, log_every

logger = get_logger(__name__)


def distance_to_icn(initial_icn: float, traces: Sequence[IterationTrace], threshold: float) -> Optional[float]:
    """首次达到 ICN ≥ threshold 时每架无人机的平均累计路程

    初始位置已满足时为0；始终未达到时为 None。
    """
    if initial_icn >= threshold:
        return 0.0
    for trace in traces:
        if trace.icn >= threshold:
            return trace.mean_traveled_m
    return None


@log_function_call
def run_trial(scenario: Scenario) -> Tuple[List[IterationTrace], TrialSummary]:
    """
    运行一次试验（随机数由 scenario.seed 决定）

    Args:
        scenario: 场景配置

    Returns:
        (迭代轨迹, 试验汇总)

    Raises:
        ProtocolException: 协议运行失败
    """
    shared = execute_run(scenario, np.random.default_rng(scenario.seed))
    traces = shared["traces"]
    H0, H = shared["initial_csi"], shared["csi"]
    noise = shared["noise"]
    world = shared["world"]

    initial = stream_report(H0, noise)
    final = stream_report(H, noise)
    initial_icn = inverse_condition_number(H0)
    low, high = ICN_DISTANCE_THRESHOLDS

    summary = TrialSummary(
        algorithm=scenario.algorithm,
        seed=scenario.seed,
        sigma_loc_m=scenario.sigma_loc_m,
        sigma_act_m=scenario.sigma_act_m,
        iterations=len(traces),
        converged=shared["converged"],
        initial_icn=initial_icn,
        final_icn=inverse_condition_number(H),
        initial_sinr_zf_db=initial.mean_db(METHOD_ZF),
        initial_sinr_nv_db=initial.mean_db(METHOD_NV),
        initial_sinr_mf_db=initial.mean_db("MF"),
        final_sinr_zf_db=final.mean_db(METHOD_ZF),
        final_sinr_nv_db=final.mean_db(METHOD_NV),
        final_sinr_mf_db=final.mean_db("MF"),
        initial_capacity_bps_hz=capacity(H0, scenario.snr_linear),
        final_capacity_bps_hz=capacity(H, scenario.snr_linear),
        max_capacity_bps_hz=max_capacity(H, scenario.snr_linear),
        final_sum_rate_zf_bps_hz=sum_rate(H, noise, METHOD_ZF, report=final),
        final_sum_rate_nv_bps_hz=sum_rate(H, noise, METHOD_NV, report=final),
        dist_to_icn050_m=distance_to_icn(initial_icn, traces, low),
        dist_to_icn095_m=distance_to_icn(initial_icn, traces, high),
        final_mean_traveled_m=world.mean_traveled,
        final_mean_net_displacement_m=world.mean_net_displacement(),
    )
    return traces, summary


def _trial_summary(scenario: Scenario) -> TrialSummary:
    # 进程池中只传回汇总
    return run_trial(scenario)[1]


def _mean_present(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def aggregate(trials: Sequence[TrialSummary], algorithm: str, axis: str,
              sigma_m: Optional[float] = None) -> SweepRow:
    """
    把一组试验汇总聚合为一行

    标准差为总体标准差；到达ICN阈值的距离只在达到阈值的试验上求平均。
    """
    if not trials:
        raise ValueError("至少需要一次试验才能聚合")
    final_nv = np.array([t.final_sinr_nv_db for t in trials])
    return SweepRow(
        algorithm=algorithm,
        axis=axis,
        sigma_m=sigma_m,
        n_trials=len(trials),
        mean_final_sinr_nv_db=float(np.mean(final_nv)),
        std_final_sinr_nv_db=float(np.std(final_nv)),
        mean_final_sinr_zf_db=float(np.mean([t.final_sinr_zf_db for t in trials])),
        mean_final_sinr_mf_db=float(np.mean([t.final_sinr_mf_db for t in trials])),
        mean_dist_to_icn050_m=_mean_present(t.dist_to_icn050_m for t in trials),
        mean_dist_to_icn095_m=_mean_present(t.dist_to_icn095_m for t in trials),
        converged_fraction=float(np.mean([t.converged for t in trials])),
        mean_initial_sinr_nv_db=float(np.mean([t.initial_sinr_nv_db for t in trials])),
        median_initial_capacity_bps_hz=float(np.median([t.initial_capacity_bps_hz for t in trials])),
        median_final_capacity_bps_hz=float(np.median([t.final_capacity_bps_hz for t in trials])),
    )


def _run_all(scenarios: List[Scenario], workers: int, progress: TrialProgress) -> List[TrialSummary]:
    """按输入顺序运行全部试验"""
    if workers <= 1:
        results = map(_trial_summary, scenarios)
        summaries = []
        for summary in results:
            progress.record(summary.converged)
            summaries.append(summary)
        return summaries

    summaries = []
    with ProcessPoolExecutor(max_workers=workers, initializer=disable_file_logging) as executor:
        for summary in executor.map(_trial_summary, scenarios):
            progress.record(summary.converged)
            summaries.append(summary)
    return summaries


def _new_progress(label: str, total: int) -> TrialProgress:
    progress = TrialProgress(label, total)
    progress.subscribe(log_every(PROGRESS_LOG_EVERY))
    return progress


def _seeded(scenario: Scenario, n_trials: int, base_seed: int) -> List[Scenario]:
    return [scenario.model_copy(update={"seed": base_seed + i}) for i in range(n_trials)]


@log_function_call
def monte_carlo(scenario: Scenario, n_trials: int, base_seed: int = 0,
                workers: Optional[int] = None) -> SweepResult:
    """
    蒙特卡洛集合：种子 base_seed .. base_seed+n_trials-1

    Args:
        scenario: 场景配置（误差取值保持不变）
        n_trials: 试验次数
        base_seed: 起始种子
        workers: 进程数，缺省取 MC_WORKERS

    Returns:
        只含一行（axis = none）的 SweepResult，附带每次试验的汇总
    """
    if n_trials < 1:
        raise ScenarioConfigException(f"试验次数必须至少为1: {n_trials}")
    workers = MC_WORKERS if workers is None else workers
    progress = _new_progress(f"{scenario.algorithm} mc", n_trials)
    trials = _run_all(_seeded(scenario, n_trials, base_seed), workers, progress)

    row = aggregate(trials, scenario.algorithm, SweepAxis.NONE.value)
    manifest = scenario_manifest(scenario, command="mc", n_trials=n_trials,
                                 seed_range=f"{base_seed}..{base_seed + n_trials - 1}")
    return SweepResult(axis=SweepAxis.NONE, values=[None], rows=[row], trials=trials, manifest=manifest)


def check_sweep_values(values: Sequence[float]) -> List[float]:
    """扫描取值必须非空、非负且升序"""
    values = [float(v) for v in values]
    if not values:
        raise ScenarioConfigException("扫描取值不能为空")
    if any(v < 0 or not np.isfinite(v) for v in values):
        raise ScenarioConfigException(f"扫描取值必须为非负有限数: {values}")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ScenarioConfigException(f"扫描取值必须升序: {values}")
    return values


@log_function_call
def sweep(scenario: Scenario, axis: str, values: Sequence[float], n_trials: int,
          base_seed: int = 0, algorithms: Optional[Sequence[str]] = None,
          workers: Optional[int] = None) -> SweepResult:
    """
    误差扫描：每个算法、每个取值运行一次蒙特卡洛集合

    每个单元使用相同的种子范围，因此同一种子在所有单元中初始位置相同。

    Args:
        scenario: 基础场景
        axis: "sigma_loc" 或 "sigma_act"
        values: 非负升序的标准差取值（米）
        n_trials: 每个单元的试验次数
        base_seed: 起始种子
        algorithms: 算法列表，缺省为场景中的算法
        workers: 进程数

    Returns:
        按算法、取值顺序排列的 SweepResult
    """
    try:
        axis = SweepAxis(axis).value
    except ValueError as e:
        raise ScenarioConfigException(f"未知的扫描轴: {axis}") from e
    if axis == SweepAxis.NONE.value:
        raise ScenarioConfigException("扫描轴必须是 sigma_loc 或 sigma_act")
    if n_trials < 1:
        raise ScenarioConfigException(f"试验次数必须至少为1: {n_trials}")
    values = check_sweep_values(values)
    try:
        algorithms = [Algorithm(a).value for a in (algorithms or [scenario.algorithm])]
    except ValueError as e:
        raise ScenarioConfigException(f"未知的算法: {algorithms}") from e
    field = f"{axis}_m"
    workers = MC_WORKERS if workers is None else workers

    cells = [(algorithm, value) for algorithm in algorithms for value in values]
    scenarios = []
    for algorithm, value in cells:
        cell = scenario.with_updates(algorithm=algorithm, **{field: value})
        scenarios.extend(_seeded(cell, n_trials, base_seed))

    progress = _new_progress(f"sweep {axis}", len(scenarios))
    trials = _run_all(scenarios, workers, progress)

    rows = []
    for i, (algorithm, value) in enumerate(cells):
        cell_trials = trials[i * n_trials:(i + 1) * n_trials]
        rows.append(aggregate(cell_trials, algorithm, axis, value))

    manifest = scenario_manifest(scenario, command="sweep", axis=axis, n_trials=n_trials,
                                 values=",".join(repr(v) for v in values),
                                 algorithms=",".join(algorithms),
                                 seed_range=f"{base_seed}..{base_seed + n_trials - 1}")
    return SweepResult(axis=axis, values=values, rows=rows, trials=trials, manifest=manifest)
