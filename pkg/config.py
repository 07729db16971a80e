#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 配置文件
所有运行参数均可通过环境变量（或项目根目录下的 .env 文件）覆盖
"""

import os

from dotenv import load_dotenv

load_dotenv()

# 日志配置
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")
LOG_FILE = os.environ.get("LOG_FILE", "logs/uav_mimo.log")

# 输出配置
OUTPUT_DIR = os.environ.get("OUTPUT_DIR", "results")

# 蒙特卡洛配置
DEFAULT_TRIALS = int(os.environ.get("DEFAULT_TRIALS", "500"))
MC_WORKERS = int(os.environ.get("MC_WORKERS", "1"))      # 1 表示在当前进程内顺序执行
PROGRESS_LOG_EVERY = int(os.environ.get("PROGRESS_LOG_EVERY", "10"))

# 协议配置
MAX_ITERATIONS = int(os.environ.get("MAX_ITERATIONS", "5000"))

# ZF 无法分辨某一数据流时报告的SINR（dB）
SINR_FLOOR_DB = float(os.environ.get("SINR_FLOOR_DB", "-100.0"))

# ICN 阈值（用于统计到达该阈值前的飞行距离）
ICN_DISTANCE_THRESHOLDS = (0.5, 0.95)

# 默认误差扫描轴（米），从亚波长到多个波长
DEFAULT_SWEEP_VALUES = (0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)

# 测试配置
if __name__ == "__main__":
    print("=== 配置信息 ===")
    print(f"日志级别: {LOG_LEVEL}")
    print(f"日志文件: {LOG_FILE or '(禁用)'}")
    print(f"输出目录: {OUTPUT_DIR}")
    print(f"默认试验次数: {DEFAULT_TRIALS}")
    print(f"并行进程数: {MC_WORKERS}")
    print(f"最大迭代次数: {MAX_ITERATIONS}")
    print(f"扫描取值: {DEFAULT_SWEEP_VALUES}")
