#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 信道模型
由三维几何构造视距MIMO信道，并计算正交性与容量指标

约定：
    - 单个位置 (Position3) 为形状 (3,) 的 numpy 数组，单位米
    - 位置列表为形状 (n, 3) 的数组
    - 信道矩阵第 n 行对应第 n 架无人机（接收端），第 m 列对应第 m 根发射天线
"""

import os
import sys
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from utils.logging import get_logger

logger = get_logger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float], Sequence[Sequence[float]]]

# 归一化方式
NORMALIZE_COLUMN = "column"   # 每列单位范数，元素模为 1/sqrt(N_R)
NORMALIZE_UNIT = "unit"       # 元素单位模
NORMALIZE_NONE = "none"       # 保持物理幅度
NORMALIZATION_MODES = (NORMALIZE_COLUMN, NORMALIZE_UNIT, NORMALIZE_NONE)


class ChannelException(Exception):
    """信道模块异常"""
    pass


class DegenerateGeometryException(ChannelException):
    """几何配置退化异常（位置重合、波长或距离非正等）"""
    pass


def as_position(value: ArrayLike) -> np.ndarray:
    """将输入转换为单个三维位置

    Args:
        value: 长度为3的序列

    Returns:
        形状为 (3,) 的浮点数组

    Raises:
        DegenerateGeometryException: 形状错误或包含非有限值
    """
    pos = np.asarray(value, dtype=float)
    if pos.shape != (3,):
        raise DegenerateGeometryException(f"位置必须是三维向量，实际形状为 {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise DegenerateGeometryException(f"位置包含非有限值: {pos}")
    return pos


def as_positions(values: ArrayLike) -> np.ndarray:
    """将输入转换为位置列表

    Returns:
        形状为 (n, 3) 的浮点数组（副本）
    """
    pos = np.array(values, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise DegenerateGeometryException(f"位置列表的形状必须为 (n, 3)，实际为 {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise DegenerateGeometryException("位置列表包含非有限值")
    return pos


def _check_distinct(positions: np.ndarray, what: str) -> None:
    if len(positions) > 1 and np.min(pdist(positions)) <= 0.0:
        raise DegenerateGeometryException(f"{what}中存在重合的位置")


class ArrayGeometry:
    """发射阵列与无人机接收端的几何配置"""

    def __init__(self,
                 tx_positions: ArrayLike,
                 rx_positions: ArrayLike,
                 wavelength: float,
                 swarm_range: float):
        """
        Args:
            tx_positions: 发射天线位置，(N_T, 3)
            rx_positions: 无人机位置，(N_R, 3)
            wavelength: 波长（米）
            swarm_range: 基站到蜂群的距离 R（米），用于远场幅度近似
        """
        self.tx_positions = as_positions(tx_positions)
        self.rx_positions = as_positions(rx_positions)
        self.wavelength = float(wavelength)
        self.swarm_range = float(swarm_range)

    @property
    def n_tx(self) -> int:
        return len(self.tx_positions)

    @property
    def n_rx(self) -> int:
        return len(self.rx_positions)

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def amplitude(self) -> float:
        """远场路径损耗系数 γ = λ/(4πR)"""
        return self.wavelength / (4.0 * np.pi * self.swarm_range)

    def validate(self) -> None:
        """检查几何配置的不变量

        Raises:
            DegenerateGeometryException: 配置退化
        """
        if not np.isfinite(self.wavelength) or self.wavelength <= 0:
            raise DegenerateGeometryException(f"波长必须为正: {self.wavelength}")
        if not np.isfinite(self.swarm_range) or self.swarm_range <= 0:
            raise DegenerateGeometryException(f"蜂群距离必须为正: {self.swarm_range}")
        if self.n_tx < 1:
            raise DegenerateGeometryException("至少需要一根发射天线")
        if self.n_rx < self.n_tx:
            raise DegenerateGeometryException(
                f"接收端数量({self.n_rx})不能少于发射天线数量({self.n_tx})")
        _check_distinct(self.tx_positions, "发射天线")
        _check_distinct(self.rx_positions, "无人机")

    def with_rx(self, rx_positions: ArrayLike) -> "ArrayGeometry":
        """返回替换了接收端位置的新几何配置"""
        return ArrayGeometry(self.tx_positions, rx_positions,
                             self.wavelength, self.swarm_range)

    def __repr__(self):
        return (f"ArrayGeometry(n_tx={self.n_tx}, n_rx={self.n_rx}, "
                f"wavelength={self.wavelength:g}, swarm_range={self.swarm_range:g})")


class ChannelMatrix:
    """N_R × N_T 复信道矩阵

    由 build_channel 构造时所有元素的模都等于 amplitude（恒模模型）；
    直接构造时不强制该约束，amplitude 作为容量与噪声计算的参考幅度。
    """

    def __init__(self, entries: ArrayLike, amplitude: float = 1.0):
        entries = np.array(entries, dtype=complex)
        if entries.ndim != 2:
            raise ChannelException(f"信道矩阵必须是二维的，实际维数 {entries.ndim}")
        n_rx, n_tx = entries.shape
        if n_tx < 1 or n_rx < n_tx:
            raise ChannelException(f"信道矩阵维度必须满足 N_R ≥ N_T ≥ 1，实际为 {entries.shape}")
        if amplitude <= 0:
            raise ChannelException(f"参考幅度必须为正: {amplitude}")
        self.entries = entries
        self.amplitude = float(amplitude)

    @property
    def n_rx(self) -> int:
        return self.entries.shape[0]

    @property
    def n_tx(self) -> int:
        return self.entries.shape[1]

    def column(self, k: int) -> np.ndarray:
        return self.entries[:, k]

    def gram(self) -> np.ndarray:
        """列的内积矩阵 G[l, k] = h_l^H h_k"""
        return self.entries.conj().T @ self.entries

    def is_constant_modulus(self, rtol: float = 1e-9) -> bool:
        return bool(np.allclose(np.abs(self.entries), self.amplitude, rtol=rtol, atol=0.0))

    def with_row(self, n: int, row: np.ndarray) -> "ChannelMatrix":
        """返回替换第 n 行后的新矩阵（单架无人机重新测量CSI）"""
        entries = self.entries.copy()
        entries[n, :] = row
        return ChannelMatrix(entries, self.amplitude)

    def normalized(self, mode: str = NORMALIZE_COLUMN) -> "ChannelMatrix":
        """按给定方式整体缩放信道

        Args:
            mode: "column" 每列单位范数；"unit" 元素单位模；"none" 不缩放

        Returns:
            缩放后的信道矩阵（幅度同步缩放）
        """
        if mode == NORMALIZE_COLUMN:
            scale = 1.0 / (self.amplitude * np.sqrt(self.n_rx))
        elif mode == NORMALIZE_UNIT:
            scale = 1.0 / self.amplitude
        elif mode == NORMALIZE_NONE:
            return self
        else:
            raise ChannelException(f"未知的归一化方式: {mode}")
        return ChannelMatrix(self.entries * scale, self.amplitude * scale)

    def __repr__(self):
        return f"ChannelMatrix({self.n_rx}x{self.n_tx}, amplitude={self.amplitude:.3e})"


def as_channel(H: Union[ChannelMatrix, ArrayLike], amplitude: float = 1.0) -> ChannelMatrix:
    """接受 ChannelMatrix 或原始数组"""
    if isinstance(H, ChannelMatrix):
        return H
    return ChannelMatrix(H, amplitude)


def _phase_rows(rx: np.ndarray, tx: np.ndarray, wavelength: float) -> np.ndarray:
    # 先对 d/λ 取模再乘 2π，减小大距离下的相位舍入误差
    cycles = np.mod(cdist(rx, tx) / wavelength, 1.0)
    return np.exp(-2j * np.pi * cycles)


def build_channel(geom: ArrayGeometry) -> ChannelMatrix:
    """根据几何配置构造LoS MIMO信道

    h[n, m] = γ · exp(−j(2π/λ)‖p_m − q_n‖)，γ = λ/(4πR) 对所有元素相同，
    相位使用精确的逐对距离。

    Args:
        geom: 几何配置

    Returns:
        信道矩阵

    Raises:
        DegenerateGeometryException: 几何配置退化
    """
    geom.validate()
    entries = geom.amplitude * _phase_rows(geom.rx_positions, geom.tx_positions, geom.wavelength)
    return ChannelMatrix(entries, geom.amplitude)


def channel_row(geom: ArrayGeometry, n: int, position: Optional[np.ndarray] = None) -> np.ndarray:
    """计算第 n 架无人机所在行的信道

    Args:
        geom: 几何配置
        n: 无人机序号
        position: 可选，替代 geom 中第 n 架无人机的位置

    Returns:
        长度为 N_T 的复向量
    """
    q = geom.rx_positions[n] if position is None else as_position(position)
    row = _phase_rows(q[None, :], geom.tx_positions, geom.wavelength)[0]
    return geom.amplitude * row


def singular_values(H: ChannelMatrix) -> np.ndarray:
    """按降序返回全部 N_T 个奇异值"""
    return np.linalg.svd(as_channel(H).entries, compute_uv=False)


def inverse_condition_number(H: ChannelMatrix) -> float:
    """逆条件数 σ_min/σ_max，取值范围 [0, 1]"""
    sv = singular_values(H)
    if sv[0] <= 0.0:
        return 0.0
    return float(min(max(sv[-1] / sv[0], 0.0), 1.0))


def objective(H: ChannelMatrix) -> float:
    """列非正交程度 f = Σ_{l≠k} |h_l^H h_k|²（有序对，两个方向都计入）"""
    G = as_channel(H).gram()
    off = ~np.eye(G.shape[0], dtype=bool)
    return float(np.sum(np.abs(G[off]) ** 2))


def capacity(H: ChannelMatrix, snr: float) -> float:
    """无发射端CSI、各天线等功率时的容量（bit/s/Hz）

    C = Σ_i log2(1 + (snr/N_T)·σ_i²/γ²)，除以 γ² 使 snr 表示
    经过路径损耗和天线增益之后每个接收天线的信噪比。

    Args:
        H: 信道矩阵
        snr: 线性信噪比

    Returns:
        容量
    """
    if snr < 0:
        raise ChannelException(f"信噪比不能为负: {snr}")
    H = as_channel(H)
    sv = singular_values(H)
    gains = (sv / H.amplitude) ** 2
    return float(np.sum(np.log2(1.0 + snr / H.n_tx * gains)))


def max_capacity(H: ChannelMatrix, snr: float) -> float:
    """相同Frobenius范数下奇异值全部相等（ICN=1）时的容量上界"""
    if snr < 0:
        raise ChannelException(f"信噪比不能为负: {snr}")
    H = as_channel(H)
    power = np.sum(np.abs(H.entries) ** 2) / H.amplitude ** 2
    per_stream = power / H.n_tx
    return float(H.n_tx * np.log2(1.0 + snr / H.n_tx * per_stream))


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return 10.0 * np.log10(value)
