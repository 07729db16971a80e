#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 节点定义
实现主控无人机与各无人机之间迭代协议的各个步骤

每个节点在 prep 中从共享存储读取状态，在 exec 中完成计算（会移动
SwarmWorld 中的无人机），在 post 中写回结果并返回下一步的动作。
"""

import os
import sys
from typing import Any, Dict, List, Tuple

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# 导入PocketFlow核心库
from pocketflow import Node

# 导入项目模块
from experiments.schema import IterationTrace
from flow.world import (apply_actuation, broadcast_csi_row, estimate_positions,
                        meets_criterion, measure_csi)
from mimo.channel import (ChannelMatrix, capacity, channel_row, inverse_condition_number,
                          objective)
from mimo.combining import METHOD_NV, METHOD_ZF, stream_report
from mimo.optimizers import (bf_probe_set, bf_select, decayed_step, gd_step, gradient,
                             plan_ura)
from utils.logging import get_logger

logger = get_logger(__name__)

ACTION_CONTINUE = "continue"
ACTION_CONVERGED = "converged"
ACTION_EXHAUSTED = "exhausted"


class BaseSwarmNode(Node):
    """
    协议节点基类
    数值计算是确定性的，失败时不重试，直接抛出
    """

    def __init__(self):
        super().__init__(max_retries=1)

    def exec_fallback(self, prep_res, exc):
        logger.error(f"{type(self).__name__} 执行失败: {exc}")
        raise exc


class CsiBroadcastNode(BaseSwarmNode):
    """
    初始CSI测量节点
    所有无人机测量并上报各自的信道行，主控无人机汇总后广播
    """

    def prep(self, shared):
        return shared["world"]

    def exec(self, world):
        return measure_csi(world)

    def post(self, shared, prep_res, exec_res):
        shared["csi"] = exec_res
        if shared.get("initial_csi") is None:
            shared["initial_csi"] = exec_res
        return "default"


class PositionEstimationNode(BaseSwarmNode):
    """
    定位节点
    每次外层迭代开始时所有无人机各自定位一次
    """

    def prep(self, shared):
        return shared["world"], shared["scenario"].error_model, shared["loc_rng"], shared["observer"]

    def exec(self, prep_res):
        world, err, rng, observer = prep_res
        return estimate_positions(world, err, rng, observer)

    def post(self, shared, prep_res, exec_res):
        return "default"


class GradientSweepNode(BaseSwarmNode):
    """
    GD扫描节点
    按序号依次：在自认为的位置计算梯度、按衰减后的步长移动、重新测量并广播自己的信道行
    """

    def prep(self, shared):
        scenario = shared["scenario"]
        return (shared["world"], shared["csi"], scenario.gd_params, scenario.error_model,
                shared["act_rng"], shared["normalization"], shared["iteration"])

    def exec(self, prep_res):
        world, H, params, err, rng, mode, iteration = prep_res
        for drone in range(world.n_rx):
            grad = gradient(world.believed_rx[drone], world.geom, H.normalized(mode), drone)
            apply_actuation(world, drone, gd_step(grad, params, iteration), err, rng)
            H = broadcast_csi_row(world, H, drone)
        return H, decayed_step(params.step, params.decay, iteration)

    def post(self, shared, prep_res, exec_res):
        shared["csi"], shared["step_m"] = exec_res
        return "default"


class ProbeSweepNode(BaseSwarmNode):
    """
    BF扫描节点
    每架无人机依次尝试探测集中的7个位置（零位移不运动），每次探测后返回，
    最后移动到目标函数最小的方向。整个过程只使用信道信息，不读取位置。
    """

    def prep(self, shared):
        scenario = shared["scenario"]
        return (shared["world"], shared["csi"], scenario.bf_params, scenario.error_model,
                shared["act_rng"], shared["normalization"], shared["iteration"])

    def exec(self, prep_res):
        world, H, params, err, rng, mode, iteration = prep_res
        step = decayed_step(params.step, params.decay, iteration)
        probes = bf_probe_set() * step
        for drone in range(world.n_rx):
            objectives = self._probe(world, H, drone, probes, err, rng, mode)
            winner = bf_select(objectives)
            apply_actuation(world, drone, probes[winner], err, rng)
            H = broadcast_csi_row(world, H, drone)
        return H, step

    @staticmethod
    def _probe(world, H: ChannelMatrix, drone: int, probes: np.ndarray, err, rng, mode: str) -> List[float]:
        objectives = []
        for move in probes:
            if not np.any(move):
                objectives.append(objective(H.normalized(mode)))
                continue
            apply_actuation(world, drone, move, err, rng)
            probed = H.with_row(drone, channel_row(world.geom, drone))
            objectives.append(objective(probed.normalized(mode)))
            apply_actuation(world, drone, -move, err, rng)
        return objectives

    def post(self, shared, prep_res, exec_res):
        shared["csi"], shared["step_m"] = exec_res
        return "default"


class UraPlanNode(BaseSwarmNode):
    """
    URA规划节点
    第一次迭代时由自认为的位置计算目标阵位并完成最优分配，之后不再改变
    """

    def prep(self, shared):
        return shared["world"], shared["scenario"], shared.get("ura_plan")

    def exec(self, prep_res):
        world, scenario, plan = prep_res
        if plan is not None:
            return plan
        believed = world.geom.with_rx(world.believed_rx)
        plan = plan_ura(believed, scenario.ura_side_counts, scenario.tx_spacing_m)
        logger.debug(f"URA目标已分配: {scenario.ura_side_counts[0]}x{scenario.ura_side_counts[1]}")
        return plan

    def post(self, shared, prep_res, exec_res):
        shared["ura_plan"] = exec_res
        return "default"


class UraMoveNode(BaseSwarmNode):
    """
    URA移动节点
    每架无人机按自认为的位置，直接飞向分配给自己的目标
    """

    def prep(self, shared):
        return (shared["world"], shared["csi"], shared["ura_plan"],
                shared["scenario"].error_model, shared["act_rng"])

    def exec(self, prep_res):
        world, H, plan, err, rng = prep_res
        for drone in range(world.n_rx):
            command = plan.target_of(drone) - world.believed_rx[drone]
            apply_actuation(world, drone, command, err, rng)
            H = broadcast_csi_row(world, H, drone)
        return H

    def post(self, shared, prep_res, exec_res):
        shared["csi"] = exec_res
        shared["step_m"] = 0.0
        return "default"


class OrthogonalityEvaluationNode(BaseSwarmNode):
    """
    正交性评估节点
    一次完整扫描之后计算ICN与各项指标，记录一条迭代轨迹并判断是否停止
    """

    def prep(self, shared):
        return shared["csi"], shared["world"], shared["noise"], shared["scenario"], shared["normalization"]

    def exec(self, prep_res) -> Dict[str, Any]:
        H, world, noise, scenario, mode = prep_res
        report = stream_report(H, noise)
        return {
            "icn": inverse_condition_number(H),
            "objective": objective(H.normalized(mode)),
            "sinr_zf_db": report.mean_db(METHOD_ZF),
            "sinr_nv_db": report.mean_db(METHOD_NV),
            "sinr_mf_db": report.mean_db("MF"),
            "mean_traveled_m": world.mean_traveled,
            "per_drone_traveled_m": world.traveled.tolist(),
            "mean_net_displacement_m": world.mean_net_displacement(),
            "capacity_bps_hz": capacity(H, scenario.snr_linear),
            "converged": meets_criterion(H, scenario.alpha),
        }

    def post(self, shared, prep_res, exec_res):
        scenario = shared["scenario"]
        converged = exec_res.pop("converged")
        shared["iteration"] += 1
        iteration = shared["iteration"]
        shared["traces"].append(IterationTrace(iteration=iteration, step_m=shared["step_m"], **exec_res))
        logger.debug(f"迭代 {iteration}: ICN={exec_res['icn']:.4f}, f={exec_res['objective']:.4e}")

        if converged:
            shared["converged"] = True
            return ACTION_CONVERGED
        if iteration >= scenario.max_iterations:
            return ACTION_EXHAUSTED
        return ACTION_CONTINUE


class FinishNode(BaseSwarmNode):
    """
    结束节点
    记录运行状态并把轨迹作为结果
    """

    def prep(self, shared):
        return shared["traces"], shared["converged"], shared["scenario"]

    def exec(self, prep_res) -> Tuple[str, int]:
        traces, converged, scenario = prep_res
        final_icn = traces[-1].icn if traces else float("nan")
        if converged:
            logger.info(f"{scenario.algorithm}: 第 {len(traces)} 次迭代达到ICN要求 ({final_icn:.4f} ≥ {scenario.alpha})")
            return ACTION_CONVERGED, len(traces)
        logger.warning(f"{scenario.algorithm}: 达到迭代上限 {scenario.max_iterations}，ICN={final_icn:.4f}")
        return ACTION_EXHAUSTED, len(traces)

    def post(self, shared, prep_res, exec_res):
        shared["status"] = exec_res[0]
        shared["result"] = shared["traces"]
        return None
