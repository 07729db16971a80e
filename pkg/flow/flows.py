#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 流程定义
组装 GD、BF 与 URA 三种定位协议的流程

三种流程共用同一结构：
    初始CSI测量 -> [定位] -> 扫描/移动 -> 正交性评估 -continue-> 下一次迭代
                                            -converged/exhausted-> 结束
"""

import os
import sys
from typing import List, Optional

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# 导入PocketFlow核心库
from pocketflow import Flow

# 导入项目模块
from experiments.schema import Algorithm, IterationTrace, Scenario
from flow.nodes import (ACTION_CONTINUE, ACTION_CONVERGED, ACTION_EXHAUSTED, CsiBroadcastNode,
                        FinishNode, GradientSweepNode, OrthogonalityEvaluationNode,
                        PositionEstimationNode, ProbeSweepNode, UraMoveNode, UraPlanNode)
from flow.shared import SharedStore, create_shared_store
from flow.world import PositionObserver
from utils.logging import get_logger

logger = get_logger(__name__)


class ProtocolException(Exception):
    """协议运行异常，原始异常通过 __cause__ 保留"""
    pass


class SwarmFlowFactory:
    """定位协议流程工厂

    创建不同算法的迭代流程
    """

    @staticmethod
    def _close_loop(loop_start, evaluation: OrthogonalityEvaluationNode) -> None:
        finish = FinishNode()
        evaluation - ACTION_CONTINUE >> loop_start
        evaluation - ACTION_CONVERGED >> finish
        evaluation - ACTION_EXHAUSTED >> finish

    def create_gd_flow(self) -> Flow:
        """创建梯度下降流程

        每次外层迭代先定位一次，再逐架无人机执行梯度步

        Returns:
            Flow: GD流程
        """
        broadcast = CsiBroadcastNode()
        estimation = PositionEstimationNode()
        sweep = GradientSweepNode()
        evaluation = OrthogonalityEvaluationNode()

        broadcast >> estimation >> sweep >> evaluation
        self._close_loop(estimation, evaluation)
        return Flow(start=broadcast)

    def create_bf_flow(self) -> Flow:
        """创建暴力探测流程（不含定位节点）

        Returns:
            Flow: BF流程
        """
        broadcast = CsiBroadcastNode()
        sweep = ProbeSweepNode()
        evaluation = OrthogonalityEvaluationNode()

        broadcast >> sweep >> evaluation
        self._close_loop(sweep, evaluation)
        return Flow(start=broadcast)

    def create_ura_flow(self) -> Flow:
        """创建URA基线流程

        Returns:
            Flow: URA流程
        """
        broadcast = CsiBroadcastNode()
        estimation = PositionEstimationNode()
        planning = UraPlanNode()
        move = UraMoveNode()
        evaluation = OrthogonalityEvaluationNode()

        broadcast >> estimation >> planning >> move >> evaluation
        self._close_loop(estimation, evaluation)
        return Flow(start=broadcast)

    def create_flow(self, algorithm: str) -> Flow:
        creators = {
            Algorithm.GD.value: self.create_gd_flow,
            Algorithm.BF.value: self.create_bf_flow,
            Algorithm.URA.value: self.create_ura_flow,
        }
        key = Algorithm(algorithm).value
        return creators[key]()


def execute_run(scenario: Scenario,
                rng: np.random.Generator,
                initial_positions: Optional[np.ndarray] = None,
                observer: Optional[PositionObserver] = None) -> SharedStore:
    """
    执行一次完整的协议运行

    Args:
        scenario: 场景配置，algorithm 决定使用的流程
        rng: 本次运行独占的随机数生成器
        initial_positions: 可选，指定初始位置
        observer: 可选，替换定位函数

    Returns:
        运行结束时的共享存储（traces、world、initial_csi 等）

    Raises:
        ProtocolException: 运行失败
    """
    shared = create_shared_store(scenario, rng, initial_positions, observer)
    logger.info(f"开始运行 {scenario.algorithm}: {scenario.n_rx} 架无人机，"
                f"{scenario.n_tx} 根发射天线，种子 {scenario.seed}")
    try:
        SwarmFlowFactory().create_flow(scenario.algorithm).run(shared)
    except Exception as e:
        raise ProtocolException(f"{scenario.algorithm} 运行失败: {e}") from e
    return shared


def _run_checked(expected: Algorithm, scenario: Scenario, rng: np.random.Generator,
                 **kwargs) -> List[IterationTrace]:
    if Algorithm(scenario.algorithm) is not expected:
        raise ProtocolException(f"场景算法为 {scenario.algorithm}，而不是 {expected.value}")
    return execute_run(scenario, rng, **kwargs)["traces"]


def run_gd(scenario: Scenario, rng: np.random.Generator, **kwargs) -> List[IterationTrace]:
    """运行梯度下降协议，返回每次外层迭代的轨迹"""
    return _run_checked(Algorithm.GD, scenario, rng, **kwargs)


def run_bf(scenario: Scenario, rng: np.random.Generator, **kwargs) -> List[IterationTrace]:
    """运行暴力探测协议（从不读取位置信息）"""
    return _run_checked(Algorithm.BF, scenario, rng, **kwargs)


def run_ura(scenario: Scenario, rng: np.random.Generator, **kwargs) -> List[IterationTrace]:
    return _run_checked(Algorithm.URA, scenario, rng, **kwargs)


def run_algorithm(scenario: Scenario, rng: np.random.Generator, **kwargs) -> List[IterationTrace]:
    """按场景中的算法分派"""
    return execute_run(scenario, rng, **kwargs)["traces"]
