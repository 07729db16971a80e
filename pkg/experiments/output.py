#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 结果输出
CSV（迭代轨迹、扫描结果、逐次试验汇总）与静态图像

CSV 以 "# key = value" 注释行开头记录场景与种子范围，随后是固定的表头。
相同输入总是写出相同的字节。
"""

import os
import sys
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from experiments.schema import IterationTrace, SweepResult
from utils.logging import get_logger

logger = get_logger(__name__)

TRACE_COLUMNS = ["iteration", "icn", "objective", "sinr_zf_db", "sinr_nv_db", "sinr_mf_db",
                 "mean_traveled_m"]
FULL_TRACE_EXTRA = ["mean_net_displacement_m", "step_m", "capacity_bps_hz"]
SWEEP_COLUMNS = ["algorithm", "axis", "sigma_m", "n_trials", "mean_final_sinr_nv_db",
                 "std_final_sinr_nv_db", "mean_final_sinr_zf_db", "mean_final_sinr_mf_db",
                 "mean_dist_to_icn050_m", "mean_dist_to_icn095_m", "converged_fraction"]

NA_REP = "NaN"
PLOT_FORMATS = ("svg", "pdf")

# 固定SVG中的随机ID与元数据
plt.rcParams.update({
    "svg.hashsalt": "uav-mimo",
    "figure.figsize": (10, 7),
    "savefig.bbox": "tight",
    "lines.linewidth": 1.8,
    "grid.alpha": 0.3,
})


class OutputException(Exception):
    """结果输出异常（路径不可写、CSV格式无法识别等）"""
    pass


def trials_path(path: str) -> str:
    """逐次试验CSV的路径：<stem>.trials.csv"""
    stem, _ = os.path.splitext(path)
    return f"{stem}.trials.csv"


def full_trace_path(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return f"{stem}.full.csv"


def _write_csv(frame: pd.DataFrame, path: str, manifest: Optional[Dict[str, str]] = None) -> None:
    header = "".join(f"# {key} = {value}\n" for key, value in (manifest or {}).items())
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(header)
            frame.to_csv(f, index=False, na_rep=NA_REP, lineterminator="\n")
    except OSError as e:
        raise OutputException(f"无法写入 {path}: {e}") from e
    logger.info(f"已写入 {path}（{len(frame)} 行）")


def trace_frame(traces: Sequence[IterationTrace], full: bool = False) -> pd.DataFrame:
    """迭代轨迹表；full 时附加净位移、步长、容量与每架无人机的路程"""
    columns = TRACE_COLUMNS + (FULL_TRACE_EXTRA if full else [])
    frame = pd.DataFrame([t.model_dump(include=set(columns)) for t in traces], columns=columns)
    if full and traces:
        per_drone = pd.DataFrame(
            [t.per_drone_traveled_m for t in traces],
            columns=[f"traveled_m_{n}" for n in range(len(traces[0].per_drone_traveled_m))],
        )
        frame = pd.concat([frame, per_drone], axis=1)
    return frame


def emit_trace_csv(traces: Sequence[IterationTrace], path: str,
                   manifest: Optional[Dict[str, str]] = None, full: bool = False) -> None:
    """写出迭代轨迹CSV（full 时另写 <stem>.full.csv）"""
    _write_csv(trace_frame(traces), path, manifest)
    if full:
        _write_csv(trace_frame(traces, full=True), full_trace_path(path), manifest)


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump(include=set(SWEEP_COLUMNS)) for row in result.rows],
                        columns=SWEEP_COLUMNS)


def trials_frame(result: SweepResult) -> pd.DataFrame:
    return pd.DataFrame([t.model_dump() for t in result.trials])


def emit_sweep_csv(result: SweepResult, path: str) -> None:
    """写出扫描（或蒙特卡洛）结果CSV，并在旁边写出逐次试验CSV"""
    _write_csv(sweep_frame(result), path, result.manifest)
    _write_csv(trials_frame(result), trials_path(path), result.manifest)


def emit_csv(result, path: str, manifest: Optional[Dict[str, str]] = None) -> None:
    """按结果类型写出CSV：SweepResult 或 IterationTrace 列表"""
    if isinstance(result, SweepResult):
        emit_sweep_csv(result, path)
    else:
        emit_trace_csv(list(result), path, manifest)


def read_csv(path: str) -> pd.DataFrame:
    """读取本项目写出的CSV（跳过注释行）"""
    try:
        return pd.read_csv(path, comment="#")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise OutputException(f"无法读取 {path}: {e}") from e


def _plot_format(path: str) -> str:
    fmt = os.path.splitext(path)[1].lstrip(".").lower()
    if fmt not in PLOT_FORMATS:
        raise OutputException(f"图像格式必须是 {'/'.join(PLOT_FORMATS)}: {path}")
    return fmt


def _save(fig, path: str) -> None:
    try:
        fmt = _plot_format(path)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else {"CreationDate": None})
    except OSError as e:
        raise OutputException(f"无法写入 {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info(f"已保存图像 {path}")


def plot_trace_frame(frame: pd.DataFrame, path: str) -> None:
    """ICN 与三种SINR随迭代次数的变化"""
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
    ax1.plot(frame["iteration"], frame["icn"], color="k")
    ax1.set_ylabel("ICN")
    ax1.set_ylim(0, 1.05)
    ax1.grid(True)

    for column, label in (("sinr_mf_db", "MF"), ("sinr_zf_db", "ZF"), ("sinr_nv_db", "NV")):
        ax2.plot(frame["iteration"], frame[column], label=label)
    ax2.set_xlabel("Iteration")
    ax2.set_ylabel("SINR (dB)")
    ax2.legend()
    ax2.grid(True)
    _save(fig, path)


def plot_sweep_frame(frame: pd.DataFrame, path: str) -> None:
    """到达ICN阈值的平均距离与最终NV SINR随误差标准差的变化（symlog横轴）"""
    axis = str(frame["axis"].iloc[0]) if len(frame) else "sigma"
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
    for algorithm, group in frame.groupby("algorithm", sort=False):
        line, = ax1.plot(group["sigma_m"], group["mean_dist_to_icn050_m"], marker="o",
                         label=f"{algorithm} ICN 0.5")
        ax1.plot(group["sigma_m"], group["mean_dist_to_icn095_m"], marker="o", linestyle=":",
                 color=line.get_color(), label=f"{algorithm} ICN 0.95")
        ax2.plot(group["sigma_m"], group["mean_final_sinr_nv_db"], marker="o", label=str(algorithm))

    for ax in (ax1, ax2):
        ax.set_xscale("symlog", linthresh=1e-4)
        ax.grid(True)
        ax.legend()
    ax1.set_ylabel("Average distance per UAV (m)")
    ax2.set_ylabel("Final NV SINR (dB)")
    ax2.set_xlabel(f"{axis} (m)")
    _save(fig, path)


def emit_plot(result, path: str) -> None:
    """把轨迹或扫描结果画成静态图（.svg / .pdf）"""
    if isinstance(result, SweepResult):
        plot_sweep_frame(sweep_frame(result), path)
    else:
        plot_trace_frame(trace_frame(list(result)), path)


def plot_from_csv(csv_path: str, out_path: str) -> str:
    """
    根据CSV表头识别类型并作图

    Returns:
        "trace" 或 "sweep"

    Raises:
        OutputException: 无法识别的CSV
    """
    frame = read_csv(csv_path)
    columns: List[str] = list(frame.columns)
    if columns[:len(TRACE_COLUMNS)] == TRACE_COLUMNS:
        plot_trace_frame(frame, out_path)
        return "trace"
    if columns == SWEEP_COLUMNS:
        plot_sweep_frame(frame, out_path)
        return "sweep"
    raise OutputException(f"无法识别的CSV表头: {','.join(columns)}")
