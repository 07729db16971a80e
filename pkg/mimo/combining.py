#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 接收合并
计算迫零(ZF)、朴素匹配滤波(NV)与理想匹配滤波(MF)下的单流SINR

流序号从0开始。发射端无CSI、不做预编码，因此每个流对应信道矩阵的一列。
"""

import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from config import SINR_FLOOR_DB
from mimo.channel import ChannelMatrix, as_channel
from utils.logging import get_logger

logger = get_logger(__name__)

METHOD_ZF = "ZF"
METHOD_NV = "NV"

# 投影范数低于 h_stream 范数的该比例时视为无法分辨
DEGENERATE_RTOL = 1e-12


class CombiningException(Exception):
    """接收合并模块异常"""
    pass


class DegenerateCombinerException(CombiningException):
    """合并向量退化（目标流落在干扰流张成的子空间内）"""
    pass


class CombinerWeights:
    """合并向量 w 及其来源"""

    def __init__(self, w: np.ndarray, method: str, degenerate: bool = False):
        self.w = np.asarray(w, dtype=complex)
        self.method = method
        self.degenerate = degenerate

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.w))

    def scaled(self, factor: complex) -> "CombinerWeights":
        return CombinerWeights(self.w * factor, self.method, self.degenerate)

    def __repr__(self):
        flag = ", degenerate" if self.degenerate else ""
        return f"CombinerWeights({self.method}, n={len(self.w)}{flag})"


class NoiseModel:
    """接收噪声，variance 为线性功率 ψ²"""

    def __init__(self, variance: float):
        if not variance > 0:
            raise CombiningException(f"噪声方差必须为正: {variance}")
        self.variance = float(variance)

    @classmethod
    def from_snr(cls, amplitude: float, snr_linear: float) -> "NoiseModel":
        """由每接收天线信噪比构造噪声：ψ² = γ²/snr"""
        if not snr_linear > 0:
            raise CombiningException(f"信噪比必须为正: {snr_linear}")
        return cls(amplitude ** 2 / snr_linear)

    def __repr__(self):
        return f"NoiseModel(variance={self.variance:.3e})"


def _check_stream(H: ChannelMatrix, stream: int) -> None:
    if not 0 <= stream < H.n_tx:
        raise CombiningException(f"流序号 {stream} 超出范围 [0, {H.n_tx})")


def zf_weights(H: ChannelMatrix, stream: int) -> CombinerWeights:
    """迫零合并：h_stream 在其余各列张成空间的正交补上的投影

    目标流无法分辨时返回 degenerate=True 的合并向量，而不是抛出异常。
    """
    H = as_channel(H)
    _check_stream(H, stream)
    h = H.column(stream)
    others = np.delete(H.entries, stream, axis=1)
    w = h.copy()
    if others.shape[1] > 0:
        # 第二次投影修正最小二乘的舍入残差
        for _ in range(2):
            coef = np.linalg.lstsq(others, w, rcond=None)[0]
            w = w - others @ coef
    degenerate = np.linalg.norm(w) < DEGENERATE_RTOL * np.linalg.norm(h)
    if degenerate:
        logger.debug(f"流 {stream} 落在干扰子空间内，ZF合并退化")
    return CombinerWeights(w, METHOD_ZF, bool(degenerate))


def nv_weights(H: ChannelMatrix, stream: int) -> CombinerWeights:
    """朴素匹配滤波：w = h_stream"""
    H = as_channel(H)
    _check_stream(H, stream)
    return CombinerWeights(H.column(stream).copy(), METHOD_NV)


def stream_sinr(H: ChannelMatrix, w: CombinerWeights, stream: int, noise: NoiseModel) -> float:
    """单流SINR = |w^H h_s|² / (Σ_{k≠s}|w^H h_k|² + ‖w‖²ψ²)

    Raises:
        DegenerateCombinerException: 合并向量退化
    """
    H = as_channel(H)
    _check_stream(H, stream)
    if w.degenerate or w.norm == 0.0:
        raise DegenerateCombinerException(f"流 {stream} 的{w.method}合并向量退化")
    g = H.entries.T @ w.w.conj()
    signal = np.abs(g[stream]) ** 2
    interference = np.sum(np.abs(np.delete(g, stream)) ** 2)
    return float(signal / (interference + w.norm ** 2 * noise.variance))


def mf_bound(H: ChannelMatrix, stream: int, noise: NoiseModel) -> float:
    """无流间干扰的匹配滤波SINR ‖h_s‖²/ψ²，作为理想参考"""
    H = as_channel(H)
    _check_stream(H, stream)
    return float(np.linalg.norm(H.column(stream)) ** 2 / noise.variance)


def to_db(sinr: np.ndarray, floor_db: float = SINR_FLOOR_DB) -> np.ndarray:
    """线性SINR转dB，0 或极小值按 floor_db 截断"""
    sinr = np.asarray(sinr, dtype=float)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(sinr)
    return np.maximum(db, floor_db)


@dataclass
class StreamReport:
    """所有流在三种合并方式下的线性SINR"""
    zf: np.ndarray
    nv: np.ndarray
    mf: np.ndarray

    def mean_db(self, method: str) -> float:
        """各流dB值的平均（轨迹默认使用的汇总方式）"""
        return float(np.mean(to_db(self.values(method))))

    def first_db(self, method: str) -> float:
        """仅第0个流的dB值"""
        return float(to_db(self.values(method))[0])

    def values(self, method: str) -> np.ndarray:
        key = method.lower()
        if key not in ("zf", "nv", "mf"):
            raise CombiningException(f"未知的合并方式: {method}")
        return getattr(self, key)


def stream_report(H: ChannelMatrix, noise: NoiseModel) -> StreamReport:
    """计算全部流的 ZF / NV / MF SINR；ZF退化的流记为0"""
    H = as_channel(H)
    zf = np.zeros(H.n_tx)
    nv = np.zeros(H.n_tx)
    mf = np.zeros(H.n_tx)
    for k in range(H.n_tx):
        w_zf = zf_weights(H, k)
        zf[k] = 0.0 if w_zf.degenerate else stream_sinr(H, w_zf, k, noise)
        nv[k] = stream_sinr(H, nv_weights(H, k), k, noise)
        mf[k] = mf_bound(H, k, noise)
    return StreamReport(zf=zf, nv=nv, mf=mf)


def sum_rate(H: ChannelMatrix, noise: NoiseModel, method: str = METHOD_ZF,
             report: Optional[StreamReport] = None) -> float:
    """由单流SINR计算的和速率 Σ_k log2(1 + SINR_k)（bit/s/Hz）"""
    report = report if report is not None else stream_report(H, noise)
    return float(np.sum(np.log2(1.0 + report.values(method))))
