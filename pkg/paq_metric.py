#!/usr/bin/env python3
"""
命令行入口: compare-queries / sweep / diagnose / scale-check
"""

import os
import sys

import click

from config import PAQ_QUERY_TYPES
from errors import PaqError
from harness import (
    DIAGNOSTIC_HEADER, SCALE_HEADER, emit_csv, emit_plot, emit_table, load_config,
    require_passed, run_compare_queries, run_diagnostics, run_paq_sweep, run_scale_check,
)
from logger import PaqLogger

logger = PaqLogger()


def _load(ctx: click.Context, experiment: str):
    opts = ctx.obj
    cfg = load_config(opts["config"], experiment, {"output_dir": opts["out"], "master_seed": opts["seed"]})
    logger.info(f"实验 {cfg.experiment}: 主种子 {cfg.master_seed}, 输出目录 {cfg.output_dir}")
    return cfg


def _write_records(cfg, records, timings: bool):
    emit_csv(records, os.path.join(cfg.output_dir, f"{cfg.experiment}.csv"), timings)
    emit_plot(records, os.path.join(cfg.output_dir, f"{cfg.experiment}.svg"))


def _apply_options(ctx: click.Context, config_path, out, seed, threads, log_level):
    """合并选项: 写在子命令后的值覆盖写在子命令前的值"""
    opts = ctx.ensure_object(dict)
    opts.setdefault("threads", 1)
    if log_level:
        logger.set_level(log_level)
    if threads is not None:
        if threads < 1:
            raise click.BadParameter("--threads 必须 >= 1")
        opts["threads"] = threads
    for key, value in (("config", config_path), ("out", out), ("seed", seed)):
        if value is not None or key not in opts:
            opts[key] = value


def common_options(f):
    """--config/--out/--seed/--threads/--log-level, 主命令与各子命令都接受"""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON 实验配置"),
        click.option("--out", default=None, help="输出目录"),
        click.option("--seed", type=int, default=None, help="主随机种子"),
        click.option("--threads", type=int, default=None, help="并行试验线程数 (默认 1)"),
        click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), default=None),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@click.group()
@common_options
@click.pass_context
def cli(ctx, config_path, out, seed, threads, log_level):
    """PAQ 度量学习数值实验"""
    _apply_options(ctx, config_path, out, seed, threads, log_level)


@cli.command("compare-queries")
@common_options
@click.option("--timings", is_flag=True, help="CSV 中写入实际耗时 (输出不再逐字节可复现)")
@click.pass_context
def compare_queries(ctx, config_path, out, seed, threads, log_level, timings):
    """成对/三元组/排序/PAQ 的样本效率对比"""
    _apply_options(ctx, config_path, out, seed, threads, log_level)
    cfg = _load(ctx, "compare_queries")
    records = run_compare_queries(cfg, ctx.obj["threads"])
    _write_records(cfg, records, timings)


@cli.command()
@common_options
@click.option("--experiment", type=click.Choice(["sweep_d", "sweep_r", "sweep_m"]), default="sweep_d",
              show_default=True)
@click.option("--with-naive", is_flag=True, help="同时运行 m = 1 且不截断的朴素估计")
@click.option("--cv", is_flag=True, help="每个网格点先用先导试验交叉验证 C1")
@click.option("--timings", is_flag=True, help="CSV 中写入实际耗时")
@click.pass_context
def sweep(ctx, config_path, out, seed, threads, log_level, experiment, with_naive, cv, timings):
    """PAQ 估计误差随 N, d, r, m 的扫描"""
    _apply_options(ctx, config_path, out, seed, threads, log_level)
    cfg = _load(ctx, experiment)
    query_types = PAQ_QUERY_TYPES if with_naive else PAQ_QUERY_TYPES[:1]
    records = run_paq_sweep(cfg, ctx.obj["threads"], query_types, cv)
    _write_records(cfg, records, timings)


@cli.command()
@common_options
@click.option("--samples", type=int, default=None, help="Monte Carlo 样本数")
@click.pass_context
def diagnose(ctx, config_path, out, seed, threads, log_level, samples):
    """偏差闭式、逆矩、截断性质的 Monte Carlo 检验"""
    _apply_options(ctx, config_path, out, seed, threads, log_level)
    cfg = _load(ctx, "diagnostics")
    rows = run_diagnostics(cfg) if samples is None else run_diagnostics(cfg, samples)
    emit_table(rows, DIAGNOSTIC_HEADER, os.path.join(cfg.output_dir, "diagnostics.csv"))
    require_passed(rows, "diagnostics")


@cli.command("scale-check")
@common_options
@click.pass_context
def scale_check(ctx, config_path, out, seed, threads, log_level):
    """(y, eta_up, Sigma*) 同乘 c 时估计是否同乘 c"""
    _apply_options(ctx, config_path, out, seed, threads, log_level)
    cfg = _load(ctx, "scale_check")
    rows = run_scale_check(cfg)
    emit_table(rows, SCALE_HEADER, os.path.join(cfg.output_dir, "scale_check.csv"))
    require_passed(rows, "scale_equivariance")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        logger.warning("已中断")
        sys.exit(130)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except PaqError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.exit(e.exit_code)
    sys.exit(0)


if __name__ == "__main__":
    main()
