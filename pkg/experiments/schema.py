"""
无人机蜂群LoS MIMO回传项目 - 数据模型定义
场景配置、误差模型、迭代轨迹与统计结果
"""

import os
import sys
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.constants import c as SPEED_OF_LIGHT

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from config import MAX_ITERATIONS
from mimo.channel import NORMALIZATION_MODES, NORMALIZE_UNIT
from mimo.optimizers import BfParams, GdParams

DEFAULT_FREQUENCY_HZ = 60e9


# 算法枚举
class Algorithm(str, Enum):
    GD = "gd"       # 梯度下降
    BF = "bf"       # 暴力探测
    URA = "ura"     # 均匀矩形阵基线


# 扫描轴枚举
class SweepAxis(str, Enum):
    NONE = "none"             # 单点蒙特卡洛
    SIGMA_LOC = "sigma_loc"   # 定位误差
    SIGMA_ACT = "sigma_act"   # 执行误差


# 误差模型
class ErrorModel(BaseModel):
    sigma_loc_m: float = Field(0.0, ge=0, description="定位误差每轴标准差（米）")
    sigma_act_m: float = Field(0.0, ge=0, description="执行误差每轴标准差（米）")


# 场景配置
class Scenario(BaseModel):
    model_config = ConfigDict(use_enum_values=True, extra="forbid", validate_default=True)

    tx_rows: int = Field(4, ge=1, description="发射阵列行数")
    tx_cols: int = Field(4, ge=1, description="发射阵列列数")
    tx_spacing_m: float = Field(0.25, gt=0, description="发射阵元间距（米）")
    n_rx: int = Field(16, ge=1, description="无人机数量")
    cube_side_m: float = Field(50.0, gt=0, description="初始分布立方体边长（米）")
    range_m: float = Field(1000.0, gt=0, description="基站到立方体中心的距离（米）")
    wavelength_m: float = Field(SPEED_OF_LIGHT / DEFAULT_FREQUENCY_HZ, gt=0, description="波长（米）")
    snr_db: float = Field(10.0, description="每接收天线信噪比（dB）")
    alpha: float = Field(0.95, ge=0, le=1, description="ICN要求")
    algorithm: Algorithm = Field(Algorithm.GD, description="定位算法")
    gd_step: float = Field(0.05, gt=0, description="GD步长 b_GD")
    gd_decay: float = Field(0.999, gt=0, le=1, description="GD步长衰减")
    bf_step: float = Field(0.3, gt=0, description="BF探测步长 b_BF（米）")
    bf_decay: float = Field(0.999, gt=0, le=1, description="BF步长衰减")
    sigma_loc_m: float = Field(0.0, ge=0, description="定位误差标准差（米）")
    sigma_act_m: float = Field(0.0, ge=0, description="执行误差标准差（米）")
    max_iterations: int = Field(MAX_ITERATIONS, ge=1, description="外层迭代上限")
    seed: int = Field(0, ge=0, description="随机种子")
    objective_normalization: str = Field(NORMALIZE_UNIT, description="优化器使用的信道归一化方式")
    ura_rows: Optional[int] = Field(None, ge=1, description="URA行数，缺省时与发射阵列一致")
    ura_cols: Optional[int] = Field(None, ge=1, description="URA列数，缺省时与发射阵列一致")

    @model_validator(mode="before")
    @classmethod
    def _frequency_to_wavelength(cls, data: Any) -> Any:
        """允许以 frequency_hz 代替 wavelength_m"""
        if isinstance(data, dict) and "frequency_hz" in data:
            data = dict(data)
            frequency = float(data.pop("frequency_hz"))
            if frequency <= 0:
                raise ValueError(f"频率必须为正: {frequency}")
            if "wavelength_m" in data:
                raise ValueError("frequency_hz 与 wavelength_m 不能同时给出")
            data["wavelength_m"] = SPEED_OF_LIGHT / frequency
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        if self.n_rx < self.n_tx:
            raise ValueError(f"无人机数量({self.n_rx})不能少于发射天线数量({self.n_tx})")
        if self.objective_normalization not in NORMALIZATION_MODES:
            raise ValueError(f"未知的归一化方式: {self.objective_normalization}")
        if (self.ura_rows is None) != (self.ura_cols is None):
            raise ValueError("ura_rows 与 ura_cols 必须同时给出")
        rows, cols = self.ura_side_counts
        if rows * cols != self.n_rx:
            raise ValueError(f"URA尺寸 {rows}x{cols} 与无人机数量 {self.n_rx} 不符")
        return self

    @property
    def n_tx(self) -> int:
        return self.tx_rows * self.tx_cols

    @property
    def frequency_hz(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength_m

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def ura_side_counts(self) -> Tuple[int, int]:
        if self.ura_rows is not None:
            return self.ura_rows, self.ura_cols
        if self.n_rx == self.n_tx:
            return self.tx_rows, self.tx_cols
        # 与发射阵列行数一致，否则退化为单行
        if self.n_rx % self.tx_rows == 0:
            return self.tx_rows, self.n_rx // self.tx_rows
        return 1, self.n_rx

    @property
    def gd_params(self) -> GdParams:
        return GdParams(step=self.gd_step, decay=self.gd_decay)

    @property
    def bf_params(self) -> BfParams:
        return BfParams(step=self.bf_step, decay=self.bf_decay)

    @property
    def error_model(self) -> ErrorModel:
        return ErrorModel(sigma_loc_m=self.sigma_loc_m, sigma_act_m=self.sigma_act_m)

    def with_updates(self, **updates: Any) -> "Scenario":
        """返回修改了部分字段并重新校验的新场景"""
        data = self.model_dump()
        data.update(updates)
        return Scenario.model_validate(data)


# 单次外层迭代的指标
class IterationTrace(BaseModel):
    iteration: int = Field(..., ge=0, description="外层迭代计数（从1开始）")
    icn: float = Field(..., ge=0, le=1, description="逆条件数")
    objective: float = Field(..., ge=0, description="归一化信道上的目标函数 f")
    sinr_zf_db: float = Field(..., description="ZF SINR（各流dB均值）")
    sinr_nv_db: float = Field(..., description="NV SINR（各流dB均值）")
    sinr_mf_db: float = Field(..., description="MF SINR上界（各流dB均值）")
    mean_traveled_m: float = Field(..., ge=0, description="每架无人机平均累计路程")
    per_drone_traveled_m: List[float] = Field(default_factory=list, description="每架无人机累计路程")
    mean_net_displacement_m: float = Field(0.0, ge=0, description="每架无人机平均净位移")
    step_m: float = Field(0.0, ge=0, description="本次迭代使用的衰减后步长")
    capacity_bps_hz: float = Field(0.0, ge=0, description="等功率容量")


# 单次试验的汇总
class TrialSummary(BaseModel):
    model_config = ConfigDict(use_enum_values=True)

    algorithm: Algorithm
    seed: int
    sigma_loc_m: float
    sigma_act_m: float
    iterations: int = Field(..., ge=0, description="执行的外层迭代次数")
    converged: bool = Field(..., description="是否达到ICN要求")
    initial_icn: float
    final_icn: float
    initial_sinr_zf_db: float
    initial_sinr_nv_db: float
    initial_sinr_mf_db: float
    final_sinr_zf_db: float
    final_sinr_nv_db: float
    final_sinr_mf_db: float
    initial_capacity_bps_hz: float
    final_capacity_bps_hz: float
    max_capacity_bps_hz: float = Field(..., description="相同Frobenius范数下ICN=1的容量")
    final_sum_rate_zf_bps_hz: float
    final_sum_rate_nv_bps_hz: float
    dist_to_icn050_m: Optional[float] = Field(None, description="首次达到ICN≥0.5时的平均路程")
    dist_to_icn095_m: Optional[float] = Field(None, description="首次达到ICN≥0.95时的平均路程")
    final_mean_traveled_m: float
    final_mean_net_displacement_m: float


# 扫描结果的一行
class SweepRow(BaseModel):
    model_config = ConfigDict(use_enum_values=True)

    algorithm: Algorithm
    axis: SweepAxis
    sigma_m: Optional[float] = None
    n_trials: int = Field(..., ge=1)
    mean_final_sinr_nv_db: float
    std_final_sinr_nv_db: float
    mean_final_sinr_zf_db: float
    mean_final_sinr_mf_db: float
    mean_dist_to_icn050_m: Optional[float] = None
    mean_dist_to_icn095_m: Optional[float] = None
    converged_fraction: float = Field(..., ge=0, le=1)
    mean_initial_sinr_nv_db: float = 0.0
    median_initial_capacity_bps_hz: float = 0.0
    median_final_capacity_bps_hz: float = 0.0


class SweepResult(BaseModel):
    model_config = ConfigDict(use_enum_values=True)

    axis: SweepAxis
    values: List[Optional[float]] = Field(default_factory=list)
    rows: List[SweepRow] = Field(default_factory=list)
    trials: List[TrialSummary] = Field(default_factory=list, description="每次试验的汇总，用于核对聚合结果")
    manifest: Dict[str, str] = Field(default_factory=dict, description="场景与种子范围")

    def rows_for(self, algorithm: str) -> List[SweepRow]:
        return [row for row in self.rows if row.algorithm == algorithm]

