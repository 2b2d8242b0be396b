"""命令行入口实现。

- `run`：按场景预设、配置文件和命令行覆盖值执行一次轨迹实验
- `validate`：运行解析结果对照校验套件
- `show-config`：打印合成后的场景配置，格式与配置文件一致
"""

from __future__ import annotations

import argparse
import os
from time import perf_counter

from loguru import logger

from decoherence_studio.data.config_files import dump_scenario_config, read_config_file, resolve_scenario_config
from decoherence_studio.logging_utils import configure_logging
from decoherence_studio.quantum.dynamics import InvariantViolationError
from decoherence_studio.settings import SCENARIO_NAMES, ScenarioConfig, load_runtime_settings
from decoherence_studio.validation import validate_suite
from decoherence_studio.workflow import run_scenario


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVARIANT_VIOLATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Decoherence Studio 纯-混合纠缠退相干数值实验")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="执行一次场景轨迹实验并写出 CSV 与 JSON 摘要")
    _add_scenario_arguments(run_parser)
    run_parser.add_argument("--jobs", default=None, help="系综成员并行线程数；可传整数或 auto，默认读环境变量")

    show_parser = subparsers.add_parser("show-config", help="打印合成后的场景配置")
    _add_scenario_arguments(show_parser)

    validate_parser = subparsers.add_parser("validate", help="运行解析结果对照校验套件")
    validate_parser.add_argument("--seed", type=int, default=0, help="随机参数种子")
    validate_parser.add_argument("--trials", type=int, default=200, help="每项随机检查的样本数")
    validate_parser.add_argument(
        "--perturbation",
        type=float,
        default=0.0,
        help="向 ρ* 的非对角元注入的扰动，用于确认 Q_D 检查能够报错",
    )
    return parser


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    """场景口径参数；不传表示沿用配置文件或预设。"""
    parser.add_argument("--scenario", choices=SCENARIO_NAMES, default=None, help="场景预设，例如 fig1、fig2、fig4b")
    parser.add_argument("--config", default=None, help="扁平 key = value 配置文件路径")
    parser.add_argument("--seed", type=int, default=None, help="耦合矩阵随机种子")
    parser.add_argument("--env-seed", type=int, default=None, help="环境初态随机种子")
    parser.add_argument("--dt", type=float, default=None, help="时间步长；默认按相位预算自动选择")
    parser.add_argument("--steps", type=int, default=None, help="演化步数上限")
    parser.add_argument("--record-every", type=int, default=None, help="每隔多少步记录一次")
    parser.add_argument("--out", default=None, help="轨迹 CSV 输出路径，摘要写在同目录 <stem>.summary.json")
    parser.add_argument("--env-dim", type=int, default=None, help="环境维度，冒烟测试可调小")


def _resolve_jobs(value: str | int | None) -> int:
    """解析系综并行线程数。"""
    if value is None:
        return load_runtime_settings().jobs
    if isinstance(value, int):
        return max(1, value)
    if value == "auto":
        return max(1, (os.cpu_count() or 2) - 1)
    parsed = int(value)
    if parsed <= 0:
        raise ValueError("--jobs 必须是正整数或 auto。")
    return parsed


def resolve_config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "env_seed": args.env_seed,
        "dt": args.dt,
        "n_steps": args.steps,
        "record_every": args.record_every,
        "output": args.out,
        "env_dim": args.env_dim,
    }
    return resolve_scenario_config(args.scenario, file_values, overrides)


def handle_run(args: argparse.Namespace) -> int:
    started_at = perf_counter()
    config = resolve_config_from_args(args)
    jobs = _resolve_jobs(args.jobs)
    logger.info("收到 run 命令: scenario={} seed={} env_seed={} jobs={}", config.scenario, config.seed, config.env_seed, jobs)
    result = run_scenario(config, jobs=jobs)

    initial, final = result.records[0], result.records[-1]
    fit = result.decay_fit
    print(f"场景 {config.scenario} 完成: 记录 {len(result.records)} 条，dt={result.summary['dt']:.6g}")
    print(f"Q_D: {initial.q_d:.6e} -> {final.q_d:.6e}；PT 最小本征值: {initial.min_pt_eig:.6e} -> {final.min_pt_eig:.6e}")
    print(f"Q_D 衰减形状: {fit.verdict} (exp_r2={fit.exp_r2:.4f}, gauss_r2={fit.gauss_r2:.4f})")
    print(f"轨迹: {result.csv_path}")
    print(f"摘要: {result.summary_path}")
    logger.info("run 命令完成: elapsed={:.2f}s", perf_counter() - started_at)
    return EXIT_OK


def handle_validate(args: argparse.Namespace) -> int:
    started_at = perf_counter()
    logger.info("收到 validate 命令: seed={} trials={} perturbation={}", args.seed, args.trials, args.perturbation)
    report = validate_suite(seed=args.seed, trials=args.trials, perturbation=args.perturbation)
    print(report.table.to_string(index=False))
    logger.info("validate 命令完成: elapsed={:.2f}s", perf_counter() - started_at)
    if not report.passed:
        print(f"校验失败: {', '.join(report.failing_checks)}")
        return EXIT_FAILURE
    print(f"全部 {len(report.table)} 项校验通过。")
    return EXIT_OK


def handle_show_config(args: argparse.Namespace) -> int:
    print(dump_scenario_config(resolve_config_from_args(args)), end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """命令行主入口。"""
    configure_logging(load_runtime_settings().log_level)
    parser = build_parser()
    args = parser.parse_args(argv)

    handlers = {
        "run": handle_run,
        "validate": handle_validate,
        "show-config": handle_show_config,
    }
    try:
        return handlers[args.command](args)
    except InvariantViolationError as exc:
        logger.error("数值不变量被破坏，运行中止: step={} trace_err={:.3e} herm_err={:.3e}", exc.step, exc.trace_err, exc.herm_err)
        print(f"错误: {exc}")
        return EXIT_INVARIANT_VIOLATION
    except Exception as exc:
        logger.error("命令执行失败: {}", exc)
        print(f"错误: {exc}")
        return EXIT_FAILURE
