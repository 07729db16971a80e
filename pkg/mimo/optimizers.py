#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 位置优化器
单架无人机的运动提议：解析梯度步(GD)、探测集取最小(BF)，
以及URA基线的目标阵位与最小距离分配
"""

import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from mimo.channel import ArrayGeometry, ChannelMatrix, as_position, as_positions
from utils.logging import get_logger

logger = get_logger(__name__)

# 发射阵列所在平面的两个轴：列沿 y，行沿 z（阵列朝向 +x）
DEFAULT_TX_AXES = ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

# 探测集 Z 的固定顺序
PROBE_LABELS = ("0", "+x", "-x", "+y", "-y", "+z", "-z")
_PROBES = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
])


class OptimizerException(Exception):
    """位置优化模块异常"""
    pass


class GradientUndefinedException(OptimizerException):
    """无人机与某根发射天线重合，单位方向向量无定义"""
    pass


class DegenerateBoresightException(OptimizerException):
    """蜂群质心与基站重合，或发射轴与视轴平行，无法确定URA平面"""
    pass


class GdParams(BaseModel):
    step: float = Field(0.05, gt=0, description="梯度步长 b_GD（米/单位梯度）")
    decay: float = Field(0.999, gt=0, le=1, description="每次外层迭代的步长衰减 d")


class BfParams(BaseModel):
    step: float = Field(0.3, gt=0, description="探测步长 b_BF（米）")
    decay: float = Field(0.999, gt=0, le=1, description="每次外层迭代的步长衰减 d")


@dataclass
class UraPlan:
    """URA基线计划：目标阵位及无人机→目标的分配"""
    targets: np.ndarray
    assignment: Optional[np.ndarray] = None

    def target_of(self, drone: int) -> np.ndarray:
        if self.assignment is None:
            raise OptimizerException("URA计划尚未分配目标")
        return self.targets[self.assignment[drone]]


def decayed_step(step: float, decay: float, iteration: int) -> float:
    """第 iteration 次外层迭代（从0计）的步长 step·decay^iteration"""
    if iteration < 0:
        raise OptimizerException(f"迭代序号不能为负: {iteration}")
    return step * decay ** iteration


def gradient(q_m: np.ndarray, geom: ArrayGeometry, H: ChannelMatrix, m: int) -> np.ndarray:
    """目标函数 f 对第 m 架无人机位置 q_m 的梯度

    ∇f = Σ_{(l,k)∈K} (4π/λ)·γ²·[Re{A_lk}·sin(a) − Im{A_lk}·cos(a)]·(u(p_l−q_m) − u(p_k−q_m))
    其中 A_lk = h_{−m,l}^H h_{−m,k}（去掉第 m 行），a = (2π/λ)(‖p_l−q_m‖ − ‖p_k−q_m‖)。
    γ 为信道的参考幅度；单位模信道时 γ² = 1。第 m 行本身不参与计算。

    Args:
        q_m: 无人机自认为的位置
        geom: 几何配置（提供发射天线位置和波长）
        H: 测量得到的信道
        m: 无人机序号

    Returns:
        三维梯度向量

    Raises:
        GradientUndefinedException: q_m 与某根发射天线重合
    """
    q_m = as_position(q_m)
    diff = geom.tx_positions - q_m
    dist = np.linalg.norm(diff, axis=1)
    if np.any(dist <= 0.0):
        raise GradientUndefinedException(f"无人机 {m} 位于发射天线处，梯度无定义")
    if H.n_tx < 2:
        return np.zeros(3)

    u = diff / dist[:, None]
    rest = np.delete(H.entries, m, axis=0)
    A = rest.conj().T @ rest
    a = geom.wavenumber * (dist[:, None] - dist[None, :])
    coef = (2.0 * geom.wavenumber) * H.amplitude ** 2 * (A.real * np.sin(a) - A.imag * np.cos(a))
    np.fill_diagonal(coef, 0.0)
    # Σ_{l,k} c_lk (u_l − u_k) = Σ_l u_l Σ_k c_lk − Σ_k u_k Σ_l c_lk
    return coef.sum(axis=1) @ u - coef.sum(axis=0) @ u


def gd_step(grad: np.ndarray, params: GdParams, iteration: int) -> np.ndarray:
    """GD运动向量 r = −(b_GD·d^i)·∇f"""
    return -decayed_step(params.step, params.decay, iteration) * np.asarray(grad, dtype=float)


def bf_probe_set() -> np.ndarray:
    """探测集 Z = {0, +x, −x, +y, −y, +z, −z}，顺序与 PROBE_LABELS 一致

    Returns:
        形状 (7, 3) 的数组
    """
    return _PROBES.copy()


def bf_select(objectives: Sequence[float]) -> int:
    """选出目标函数最小的探测方向

    相等时优先不动（序号0），其次取序号最小者。
    """
    values = np.asarray(objectives, dtype=float)
    if values.shape != (len(_PROBES),):
        raise OptimizerException(f"需要 {len(_PROBES)} 个目标函数值，实际为 {values.shape}")
    if not np.all(np.isfinite(values)):
        raise OptimizerException(f"目标函数值包含非有限值: {values}")
    return int(np.argmin(values))


def ura_spacing(wavelength: float, distance: float, count: int, tx_spacing: float) -> float:
    """Rayleigh间距 d_r = λR/(N·d_t)"""
    return wavelength * distance / (count * tx_spacing)


def _perpendicular_axis(axis: np.ndarray, *basis: np.ndarray) -> np.ndarray:
    v = np.asarray(axis, dtype=float)
    for b in basis:
        v = v - np.dot(v, b) * b
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        raise DegenerateBoresightException("发射阵列轴与视轴平行，无法确定URA方向")
    return v / norm


def ura_targets(geom: ArrayGeometry,
                side_counts: Tuple[int, int],
                tx_spacing: float,
                tx_axes: Tuple[Sequence[float], Sequence[float]] = DEFAULT_TX_AXES) -> UraPlan:
    """计算URA基线的目标阵位（不含分配）

    目标为以当前接收端质心为中心、位于垂直于基站→质心连线平面内的
    rows × cols 矩形网格；两个网格轴为发射阵列列轴/行轴在该平面上的投影，
    每个轴的间距为 λR/(N·d_t)，R 为基站到质心的实际距离，N 为接收网格在该轴上的
    点数。URA 尺寸缺省与发射阵列相同（如 4×4 对 4×4），此时与按发射阵元数计算一致；
    两者不同时以接收网格为准。

    Args:
        geom: 几何配置，rx_positions 为无人机（自认为的）当前位置
        side_counts: (行数, 列数)，乘积必须等于 N_R
        tx_spacing: 发射阵元间距 d_t
        tx_axes: 发射阵列的 (列轴, 行轴)

    Returns:
        只含 targets 的 UraPlan，targets 按行优先排列

    Raises:
        DegenerateBoresightException: 质心与基站重合
    """
    rows, cols = int(side_counts[0]), int(side_counts[1])
    if rows < 1 or cols < 1 or rows * cols != geom.n_rx:
        raise OptimizerException(f"URA尺寸 {rows}x{cols} 与无人机数量 {geom.n_rx} 不符")
    if tx_spacing <= 0:
        raise OptimizerException(f"发射阵元间距必须为正: {tx_spacing}")

    centroid = geom.rx_positions.mean(axis=0)
    boresight = centroid - geom.tx_positions.mean(axis=0)
    distance = float(np.linalg.norm(boresight))
    if distance <= 1e-9:
        raise DegenerateBoresightException("蜂群质心与基站重合")
    b = boresight / distance

    col_axis = _perpendicular_axis(tx_axes[0], b)
    row_axis = _perpendicular_axis(tx_axes[1], b, col_axis)

    d_col = ura_spacing(geom.wavelength, distance, cols, tx_spacing)
    d_row = ura_spacing(geom.wavelength, distance, rows, tx_spacing)
    col_off = (np.arange(cols) - (cols - 1) / 2.0) * d_col
    row_off = (np.arange(rows) - (rows - 1) / 2.0) * d_row

    targets = (centroid[None, None, :]
               + row_off[:, None, None] * row_axis[None, None, :]
               + col_off[None, :, None] * col_axis[None, None, :]).reshape(-1, 3)
    logger.debug(f"URA目标: {rows}x{cols}，间距 {d_row:.3f}m x {d_col:.3f}m，距离 {distance:.1f}m")
    return UraPlan(targets=targets)


def assign_targets(current: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """最小总欧氏距离的一一分配（最优线性分配）

    Returns:
        置换数组 perm，第 i 架无人机前往 targets[perm[i]]
    """
    current = as_positions(current)
    targets = as_positions(targets)
    if len(current) != len(targets):
        raise OptimizerException(f"无人机数量({len(current)})与目标数量({len(targets)})不符")
    rows, cols = linear_sum_assignment(cdist(current, targets))
    perm = np.empty(len(current), dtype=int)
    perm[rows] = cols
    return perm


def assignment_cost(current: np.ndarray, targets: np.ndarray, perm: np.ndarray) -> float:
    """分配的总移动距离 Σ‖current_i − targets[perm[i]]‖"""
    current = as_positions(current)
    targets = as_positions(targets)
    return float(np.sum(np.linalg.norm(targets[np.asarray(perm)] - current, axis=1)))


def plan_ura(geom: ArrayGeometry, side_counts: Tuple[int, int], tx_spacing: float) -> UraPlan:
    """计算URA目标并完成最优分配"""
    plan = ura_targets(geom, side_counts, tx_spacing)
    plan.assignment = assign_targets(geom.rx_positions, plan.targets)
    return plan
