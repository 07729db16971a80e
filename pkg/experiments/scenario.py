#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 场景配置
默认场景、发射阵列与初始位置的生成，以及 key = value 场景文件的读写

场景文件格式：
    # 注释行与空行被忽略
    algorithm = bf
    sigma_loc_m = 0.001
    frequency_hz = 60e9     # 可代替 wavelength_m

键名与 Scenario 字段一致，未知键视为配置错误。
"""

import io
import os
import sys
from typing import Any, Dict, Optional

import numpy as np
from dotenv import dotenv_values
from dotenv.parser import parse_stream
from pydantic import ValidationError

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from experiments.schema import Scenario
from mimo.channel import ArrayGeometry
from utils.logging import get_logger

logger = get_logger(__name__)


class ScenarioConfigException(Exception):
    """场景配置异常（文件不可读、键名未知或取值非法）"""
    pass


def default_scenario() -> Scenario:
    """默认的参考配置

    4×4 发射方阵，阵元间距 25 cm；16 架无人机随机分布在边长 50 m、
    中心距基站 1 km 的立方体内；60 GHz；SNR 10 dB；
    b_BF = 0.3，b_GD = 0.05，衰减 0.999；ICN 要求 0.95。
    """
    return Scenario()


def build_scenario(**fields: Any) -> Scenario:
    """以默认场景为基础构造场景，校验失败时转换为 ScenarioConfigException"""
    try:
        return Scenario.model_validate(fields)
    except ValidationError as e:
        raise ScenarioConfigException(f"场景配置非法: {e}") from e


def transmit_positions(scenario: Scenario) -> np.ndarray:
    """发射阵列位置：以原点为中心、位于 y-z 平面、朝向 +x 的均匀矩形阵

    第 m = r·cols + c 根天线位于 (0, (c − (cols−1)/2)·d, (r − (rows−1)/2)·d)。
    """
    d = scenario.tx_spacing_m
    rows, cols = scenario.tx_rows, scenario.tx_cols
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.column_stack([
        np.zeros(rows * cols),
        (c - (cols - 1) / 2.0) * d,
        (r - (rows - 1) / 2.0) * d,
    ])


def sample_initial_positions(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """在中心位于 (range_m, 0, 0)、边长 cube_side_m 的立方体内均匀撒点

    Returns:
        (n_rx, 3) 的位置数组
    """
    half = scenario.cube_side_m / 2.0
    offsets = rng.uniform(-half, half, size=(scenario.n_rx, 3))
    return offsets + np.array([scenario.range_m, 0.0, 0.0])


def build_geometry(scenario: Scenario, rx_positions: np.ndarray) -> ArrayGeometry:
    """由场景与无人机位置构造几何配置"""
    return ArrayGeometry(transmit_positions(scenario), rx_positions,
                         scenario.wavelength_m, scenario.range_m)


def parse_scenario_text(text: str) -> Dict[str, str]:
    """解析 key = value 文本（与 .env 文件同一种格式，由 python-dotenv 解析）

    Raises:
        ScenarioConfigException: 行无法解析、缺少取值或键重复
    """
    seen = set()
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ScenarioConfigException(f"第{line}行无法解析: {binding.original.string.strip()}")
        if binding.key is None:
            continue
        if binding.key in seen:
            raise ScenarioConfigException(f"第{line}行键重复: {binding.key}")
        seen.add(binding.key)

    fields = dotenv_values(stream=io.StringIO(text), interpolate=False)
    for key, value in fields.items():
        if value is None or not value.strip():
            raise ScenarioConfigException(f"字段 {key} 缺少取值")
    return dict(fields)


def _normalize_value(value: str) -> Optional[str]:
    return None if value.lower() in ("none", "null", "") else value


def load_scenario_file(path: str, base: Optional[Scenario] = None) -> Scenario:
    """读取场景文件，覆盖 base（缺省为默认场景）中的字段

    Args:
        path: 场景文件路径
        base: 基础场景

    Returns:
        新场景

    Raises:
        ScenarioConfigException: 文件不可读或内容非法
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ScenarioConfigException(f"无法读取场景文件 {path}: {e}") from e

    updates = {key: _normalize_value(value) for key, value in parse_scenario_text(text).items()}
    logger.info(f"从 {path} 读取了 {len(updates)} 个场景字段")
    return apply_overrides(base or default_scenario(), **updates)


def apply_overrides(scenario: Scenario, **overrides: Any) -> Scenario:
    """用非 None 的取值覆盖场景字段（命令行参数使用）"""
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return scenario
    data = scenario.model_dump()
    if "frequency_hz" in updates:
        data.pop("wavelength_m", None)
    unknown = sorted(set(updates) - set(data) - {"frequency_hz"})
    if unknown:
        raise ScenarioConfigException(f"未知的场景字段: {', '.join(unknown)}")
    data.update(updates)
    return build_scenario(**data)


def scenario_manifest(scenario: Scenario, **extra: Any) -> Dict[str, str]:
    """场景的 key = value 清单（写入CSV注释，也可直接作为场景文件）"""
    manifest = {key: _format_value(value) for key, value in scenario.model_dump().items()}
    manifest.update({key: _format_value(value) for key, value in extra.items()})
    return manifest


def format_manifest(manifest: Dict[str, str]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in manifest.items())


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)
