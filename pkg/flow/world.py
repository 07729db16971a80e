#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 蜂群世界状态
地面真值几何、无人机自认为的位置、累计飞行路程，以及定位/执行误差的注入
"""

import os
import sys
from typing import Callable, Optional

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from experiments.schema import ErrorModel
from mimo.channel import (ArrayGeometry, ChannelMatrix, as_position, build_channel,
                          channel_row, inverse_condition_number)

# observer(true_pos, err, rng) -> 观测到的位置
PositionObserver = Callable[[np.ndarray, ErrorModel, np.random.Generator], np.ndarray]


class SwarmWorld:
    """一次运行中蜂群的全部状态

    geom 为地面真值；believed_rx 是各无人机最近一次定位得到的位置；
    traveled 是每架无人机的累计路程（包括BF探测的往返运动）。
    """

    def __init__(self, geom: ArrayGeometry):
        geom.validate()
        self.geom = geom
        self.initial_rx = geom.rx_positions.copy()
        self.believed_rx = geom.rx_positions.copy()
        self.traveled = np.zeros(geom.n_rx)

    @property
    def n_rx(self) -> int:
        return self.geom.n_rx

    @property
    def true_rx(self) -> np.ndarray:
        return self.geom.rx_positions

    @property
    def mean_traveled(self) -> float:
        return float(np.mean(self.traveled))

    def net_displacement(self) -> np.ndarray:
        """每架无人机相对初始位置的净位移"""
        return np.linalg.norm(self.true_rx - self.initial_rx, axis=1)

    def mean_net_displacement(self) -> float:
        return float(np.mean(self.net_displacement()))

    def __repr__(self):
        return f"SwarmWorld(n_rx={self.n_rx}, mean_traveled={self.mean_traveled:.3f}m)"


def measure_csi(world: SwarmWorld) -> ChannelMatrix:
    """完美CSI测量：只取决于真实位置"""
    return build_channel(world.geom)


def broadcast_csi_row(world: SwarmWorld, H: ChannelMatrix, drone: int) -> ChannelMatrix:
    """单架无人机移动后重新测量并广播自己的那一行"""
    return H.with_row(drone, channel_row(world.geom, drone))


def observe_position(true_pos: np.ndarray, err: ErrorModel, rng: np.random.Generator) -> np.ndarray:
    """定位：真实位置加上每轴标准差为 sigma_loc 的高斯噪声

    sigma_loc 为 0 时原样返回（仍会消耗随机数）。
    """
    true_pos = as_position(true_pos)
    return true_pos + err.sigma_loc_m * rng.standard_normal(3)


def estimate_positions(world: SwarmWorld, err: ErrorModel, rng: np.random.Generator,
                       observer: Optional[PositionObserver] = None) -> np.ndarray:
    """所有无人机按序号依次定位，结果写入 world.believed_rx"""
    observer = observer or observe_position
    for n in range(world.n_rx):
        world.believed_rx[n] = observer(world.true_rx[n], err, rng)
    return world.believed_rx


def apply_actuation(world: SwarmWorld, drone: int, command: np.ndarray,
                    err: ErrorModel, rng: np.random.Generator) -> SwarmWorld:
    """执行运动指令 r：真实位置变为 q + r + n_act

    零指令不产生任何运动，也不抽取随机数。
    路程按实际位移的长度累计。
    """
    command = as_position(command)
    if not np.any(command):
        return world
    actual = command + err.sigma_act_m * rng.standard_normal(3)
    world.geom.rx_positions[drone] = world.geom.rx_positions[drone] + actual
    world.traveled[drone] += float(np.linalg.norm(actual))
    return world


def meets_criterion(H: ChannelMatrix, alpha: float) -> bool:
    """ICN ≥ alpha（含边界）"""
    return inverse_condition_number(H) >= alpha
