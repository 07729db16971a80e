#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 共享存储设计
定义一次协议运行中各节点共享的数据结构
"""

import os
import sys
from typing import Any, Dict, Optional

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from experiments.schema import Scenario
from experiments.scenario import build_geometry, sample_initial_positions
from flow.world import PositionObserver, SwarmWorld, measure_csi, observe_position
from mimo.combining import NoiseModel


class SharedStore:
    """共享存储类，用于在节点间传递数据"""

    def __init__(self, initial_data: Optional[Dict[str, Any]] = None):
        """
        初始化共享存储

        Args:
            initial_data: 初始数据
        """
        self._data = {} if initial_data is None else initial_data.copy()

    def get(self, key: str, default: Any = None) -> Any:
        """获取指定键的值"""
        return self._data.get(key, default)

    def __getitem__(self, key):
        """支持字典风格访问: shared[key]"""
        return self._data[key]

    def __setitem__(self, key, value):
        """支持字典风格设置: shared[key] = value"""
        self._data[key] = value

    def __contains__(self, key):
        """支持使用in操作符: key in shared"""
        return key in self._data

    def __repr__(self):
        keys = ", ".join(sorted(self._data))
        return f"SharedStore({keys})"


# 默认共享存储结构
DEFAULT_SHARED_STORE = {
    # 配置
    "scenario": None,            # Scenario
    "noise": None,               # 物理信道上的 NoiseModel
    "normalization": None,       # 优化器使用的信道归一化方式

    # 蜂群状态
    "world": None,               # SwarmWorld
    "csi": None,                 # 主控无人机当前持有的信道矩阵
    "initial_csi": None,         # 随机初始位置下的信道
    "ura_plan": None,            # URA基线的目标与分配

    # 随机数
    "loc_rng": None,             # 定位噪声
    "act_rng": None,             # 执行噪声
    "observer": None,            # 定位函数，测试中可替换以检查调用

    # 迭代状态
    "iteration": 0,              # 已完成的外层迭代数
    "step_m": 0.0,               # 本次迭代的衰减后步长
    "traces": [],                # IterationTrace 列表
    "converged": False,          # 是否达到ICN要求
    "status": None,              # "converged" 或 "exhausted"

    # 结果
    "result": None,
}


def create_shared_store(scenario: Scenario,
                        rng: np.random.Generator,
                        initial_positions: Optional[np.ndarray] = None,
                        observer: Optional[PositionObserver] = None) -> SharedStore:
    """
    创建一次运行的共享存储

    先从 rng 抽取初始位置，再抽取两个子种子分别用于定位噪声和执行噪声，
    因此相同种子下各算法、各误差取值的初始位置相同。

    Args:
        scenario: 场景配置
        rng: 本次运行独占的随机数生成器
        initial_positions: 可选，指定初始位置（此时不从 rng 抽取位置）
        observer: 可选，替换定位函数

    Returns:
        初始化的共享存储
    """
    if initial_positions is None:
        initial_positions = sample_initial_positions(scenario, rng)
    loc_seed, act_seed = rng.integers(0, 2 ** 63 - 1, size=2)

    world = SwarmWorld(build_geometry(scenario, initial_positions))
    csi = measure_csi(world)

    shared_data = dict(DEFAULT_SHARED_STORE)
    shared_data.update({
        "scenario": scenario,
        "noise": NoiseModel.from_snr(world.geom.amplitude, scenario.snr_linear),
        "normalization": scenario.objective_normalization,
        "world": world,
        "csi": csi,
        "initial_csi": csi,
        "loc_rng": np.random.default_rng(int(loc_seed)),
        "act_rng": np.random.default_rng(int(act_seed)),
        "observer": observer or observe_position,
        "traces": [],
    })
    return SharedStore(shared_data)
