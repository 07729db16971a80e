#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 命令行入口

用法:
    python swarm_sim.py run   --algorithm bf --seed 3 --out results/bf_trace.csv
    python swarm_sim.py mc    --algorithm gd --trials 50 --workers 4
    python swarm_sim.py sweep --axis sigma_act --algorithms gd,bf --trials 100
    python swarm_sim.py plot  --csv results/sweep.csv --out results/sweep.svg

退出码：0 成功，2 配置错误，1 其他失败
"""

import argparse
import os
import sys
from typing import List, Optional

from config import DEFAULT_SWEEP_VALUES, DEFAULT_TRIALS, MC_WORKERS, OUTPUT_DIR
from experiments.output import OutputException, emit_sweep_csv, emit_trace_csv, plot_from_csv
from experiments.runner import monte_carlo, run_trial, sweep
from experiments.scenario import (ScenarioConfigException, apply_overrides, default_scenario,
                                  load_scenario_file, scenario_manifest)
from experiments.schema import Algorithm, SweepAxis
from utils.logging import get_logger, set_level

logger = get_logger("swarm_sim")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _csv_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in _csv_list(text)]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"无法解析取值列表: {text}") from e


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", type=str, help="key = value 格式的场景文件")
    parser.add_argument("--algorithm", choices=[a.value for a in Algorithm], help="定位算法")
    parser.add_argument("--seed", type=int, help="随机种子（mc/sweep 为起始种子）")
    parser.add_argument("--sigma-loc", type=float, help="定位误差标准差（米）")
    parser.add_argument("--sigma-act", type=float, help="执行误差标准差（米）")
    parser.add_argument("--alpha", type=float, help="ICN要求")
    parser.add_argument("--max-iters", type=int, help="外层迭代上限")
    parser.add_argument("--out", type=str, help="输出CSV路径")
    parser.add_argument("--log-level", type=str, help="日志级别，如 DEBUG")


def _add_trial_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="试验次数")
    parser.add_argument("--workers", type=int, default=MC_WORKERS, help="并行进程数")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description="无人机蜂群LoS MIMO回传定位仿真")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="单次试验，输出迭代轨迹CSV")
    _add_scenario_args(run)
    run.add_argument("--full-trace", action="store_true", help="另写包含全部指标的 <out>.full.csv")

    mc = commands.add_parser("mc", help="蒙特卡洛集合")
    _add_scenario_args(mc)
    _add_trial_args(mc)

    sw = commands.add_parser("sweep", help="误差标准差扫描")
    _add_scenario_args(sw)
    _add_trial_args(sw)
    sw.add_argument("--axis", choices=[SweepAxis.SIGMA_LOC.value, SweepAxis.SIGMA_ACT.value],
                    default=SweepAxis.SIGMA_LOC.value, help="扫描轴")
    sw.add_argument("--values", type=_float_list, default=list(DEFAULT_SWEEP_VALUES),
                    help="逗号分隔的标准差取值（米）")
    sw.add_argument("--algorithms", type=_csv_list, help="逗号分隔的算法列表，如 gd,bf,ura")

    plot = commands.add_parser("plot", help="由CSV生成静态图像")
    plot.add_argument("--csv", type=str, required=True, help="轨迹或扫描CSV")
    plot.add_argument("--out", type=str, required=True, help="输出图像（.svg 或 .pdf）")
    plot.add_argument("--log-level", type=str, help="日志级别")

    return parser.parse_args(argv)


def build_scenario_from_args(args: argparse.Namespace):
    """默认场景 -> 场景文件 -> 命令行参数"""
    scenario = default_scenario()
    if args.scenario:
        scenario = load_scenario_file(args.scenario, scenario)
    return apply_overrides(
        scenario,
        algorithm=args.algorithm,
        seed=args.seed,
        sigma_loc_m=args.sigma_loc,
        sigma_act_m=args.sigma_act,
        alpha=args.alpha,
        max_iterations=args.max_iters,
    )


def _default_out(name: str) -> str:
    return os.path.join(OUTPUT_DIR, f"{name}.csv")


def cmd_run(args: argparse.Namespace) -> int:
    scenario = build_scenario_from_args(args)
    traces, summary = run_trial(scenario)
    out = args.out or _default_out(f"trace_{scenario.algorithm}_seed{scenario.seed}")
    emit_trace_csv(traces, out, scenario_manifest(scenario, command="run"), full=args.full_trace)
    logger.info(f"{summary.algorithm}: {summary.iterations} 次迭代，ICN {summary.initial_icn:.3f} -> "
                f"{summary.final_icn:.3f}，NV SINR {summary.initial_sinr_nv_db:.1f} -> "
                f"{summary.final_sinr_nv_db:.1f} dB")
    return EXIT_OK


def cmd_mc(args: argparse.Namespace) -> int:
    scenario = build_scenario_from_args(args)
    result = monte_carlo(scenario, args.trials, base_seed=scenario.seed, workers=args.workers)
    emit_sweep_csv(result, args.out or _default_out(f"mc_{scenario.algorithm}"))
    row = result.rows[0]
    logger.info(f"{row.algorithm}: 收敛比例 {row.converged_fraction:.2f}，"
                f"平均最终NV SINR {row.mean_final_sinr_nv_db:.2f} dB")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = build_scenario_from_args(args)
    result = sweep(scenario, args.axis, args.values, args.trials, base_seed=scenario.seed,
                   algorithms=args.algorithms, workers=args.workers)
    emit_sweep_csv(result, args.out or _default_out(f"sweep_{args.axis}"))
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    kind = plot_from_csv(args.csv, args.out)
    logger.info(f"已由{kind} CSV生成 {args.out}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "mc": cmd_mc,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ScenarioConfigException as e:
        logger.error(f"配置错误: {e}")
        return EXIT_CONFIG
    except OutputException as e:
        logger.error(f"输出失败: {e}")
        return EXIT_FAILURE
    except Exception as e:
        logger.exception(f"运行失败: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
