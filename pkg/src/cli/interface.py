# PosMNL 命令行界面
# 子命令：optimize / gen-instance / simulate / extract-params / selftest / suite
# 机器可读结果写标准输出，诊断信息经 rich 写标准错误

import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np
from click.core import ParameterSource
from rich.console import Console
from rich.table import Table
from scipy import stats as scipy_stats

from config.settings import IngestConfig, get_config

from ..core.choice_model import Placement, choice_distribution, sample_choice
from ..core.estimation import C5, C7, StatsRow, solve_clipped_mle, solve_score_root
from ..core.instance_io import dump_instance, dumps_instance, load_instance
from ..core.simulator import SimConfig, run_replications
from ..core.static_opt import brute_force_optimize, dinkelbach_optimize
from ..modules.expedia_ingest import ExtractedParams, build_instance, extract_parameters, load_impressions
from ..modules.experiments import SUITES, run_suite
from ..modules.instances import (
    example_instance,
    expedia_example,
    hard_instance,
    random_instance,
)
from ..modules.policies import PolicyKind
from ..utils.exceptions import PosMNLException
from ..utils.logger import setup_logging

err_console = Console(stderr=True)

POLICY_CHOICES = [kind.value for kind in PolicyKind]


@dataclass
class CheckResult:
    """自检项结果"""
    name: str
    passed: bool
    detail: str


def _check_optimizer_oracle(count: int) -> CheckResult:
    worst = 0.0
    for seed in range(count):
        rng = np.random.default_rng(seed)
        n_products = int(rng.integers(1, 7))
        n_positions = int(rng.integers(1, min(3, n_products) + 1))
        kind = "multiplicative" if seed % 2 == 0 else "general"
        instance = random_instance(n_products, n_positions, kind, seed)
        fast = dinkelbach_optimize(instance.revenues, instance.attraction_matrix())
        oracle = brute_force_optimize(instance.revenues, instance.attraction_matrix())
        worst = max(worst, abs(fast.revenue - oracle.revenue))
    return CheckResult("optimizer matches brute force", worst <= 1e-9,
                       f"{count} random instances, max gap {worst:.2e}")


def _check_dinkelbach_iterations() -> CheckResult:
    corpus = [example_instance(i) for i in range(1, 7)] + [hard_instance(8, 2, 1000)]
    worst = max(dinkelbach_optimize(inst.revenues, inst.attraction_matrix()).iterations for inst in corpus)
    return CheckResult("dinkelbach converges quickly", worst <= 10, f"max iterations {worst} over {len(corpus)} instances")


def _check_hard_instance() -> CheckResult:
    instance = hard_instance(8, 2, 1000)
    epsilon = instance.metadata["epsilon"]
    revenue = brute_force_optimize(instance.revenues, instance.attraction_matrix()).revenue
    expected = (1 + epsilon) / (2 + epsilon)
    passed = abs(epsilon - math.sqrt(16 / 243000)) <= 1e-9 and abs(revenue - expected) <= 1e-12
    return CheckResult("hard instance optimum", passed, f"eps={epsilon:.7f}, revenue={revenue:.12f}")


def _check_sampler(draws: int) -> CheckResult:
    instance = example_instance(1)
    placement = Placement.from_pairs([(1, 1), (3, 2)])
    rng = np.random.default_rng(2024)
    counts = {-1: 0, 0: 0, 2: 0}
    for _ in range(draws):
        counts[sample_choice(instance, placement, rng).chosen] += 1
    observed = np.array([counts[-1], counts[0], counts[2]])
    expected = choice_distribution(instance, placement) * draws
    p_value = float(scipy_stats.chisquare(observed, expected).pvalue)
    return CheckResult("choice sampler goodness of fit", p_value > 1e-3, f"{draws} draws, p={p_value:.4f}")


def _check_mle_closed_forms() -> CheckResult:
    single = solve_clipped_mle(StatsRow(np.array([4]), np.array([1])), [1.0])
    root = solve_score_root(StatsRow(np.array([1, 1]), np.array([1, 0])), [1.0, 0.5])
    clipped = solve_clipped_mle(StatsRow(np.array([1, 1]), np.array([1, 0])), [1.0, 0.5])
    passed = abs(single - 1 / 3) <= 1e-9 and abs(root - math.sqrt(2)) <= 1e-9 and clipped == 1.0
    return CheckResult("clipped MLE closed forms", passed, f"w/(n-w)={single:.10f}, root={root:.10f}")


def _check_constants() -> CheckResult:
    passed = (abs(C5 - (200 + 32 * math.sqrt(6)) / 3) <= 1e-9
              and abs(C7 - (208 + 32 * math.sqrt(6) + 32 * math.sqrt(42)) / 3) <= 1e-9)
    return CheckResult("confidence constants", passed, f"C5={C5:.6f}, C7={C7:.6f}")


def run_selftest(quick: bool = False) -> List[CheckResult]:
    """运行全部自检项"""
    checks: List[Callable[[], CheckResult]] = [
        lambda: _check_optimizer_oracle(40 if quick else 200),
        _check_dinkelbach_iterations,
        _check_hard_instance,
        lambda: _check_sampler(10_000 if quick else 100_000),
        _check_mle_closed_forms,
        _check_constants,
    ]
    results = []
    for check in checks:
        try:
            results.append(check())
        except PosMNLException as e:
            results.append(CheckResult(getattr(check, "__name__", "check"), False, str(e)))
    return results


@click.group()
@click.option('--log-level', default=None, help='日志级别（默认取配置）')
@click.option('--json-logs', is_flag=True, default=False, help='输出JSON结构化日志')
def cli(log_level, json_logs):
    """位置感知MNL多臂老虎机 CLI"""
    settings = get_config()
    log_file = settings.logging.file_path if settings.logging.file_enabled else None
    setup_logging(log_level or settings.logging.level.value, json_logs or settings.logging.json_format, log_file)


@cli.command()
@click.argument('instance_path', type=click.Path(dir_okay=False))
@click.option('--epsilon', default=None, type=float, help='Dinkelbach 终止容差')
@click.option('--brute-force', is_flag=True, default=False, help='使用穷举法求解')
def optimize(instance_path, epsilon, brute_force):
    """求实例文件的静态最优放置"""
    settings = get_config().optimizer
    instance = load_instance(instance_path)
    V = instance.attraction_matrix()
    if brute_force:
        result = brute_force_optimize(instance.revenues, V, budget=settings.enumeration_budget)
    else:
        result = dinkelbach_optimize(instance.revenues, V,
                                     epsilon=settings.epsilon if epsilon is None else epsilon,
                                     max_iterations=settings.max_iterations,
                                     zero_tolerance=settings.zero_tolerance)
    click.echo(json.dumps({
        "instance": instance.name,
        "revenue": result.revenue,
        "placement": result.placement.to_pairs(),
        "iterations": result.iterations,
    }))
    return 0


@cli.command('gen-instance')
@click.option('--example', 'example_id', type=click.IntRange(1, 12), default=None, help='算例编号 1-12')
@click.option('--random', 'random_kind', type=click.Choice(['multiplicative', 'general']), default=None,
              help='生成随机实例')
@click.option('--hard', is_flag=True, default=False, help='生成下界构造实例')
@click.option('--from-params', 'params_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='由抽取的参数文件构造实例')
@click.option('-n', '--products', type=int, default=None, help='商品数 N')
@click.option('-k', '--positions', type=int, default=None, help='位置数 K')
@click.option('--horizon', type=int, default=None, help='下界实例的总轮数 T')
@click.option('--seed', type=int, default=0, help='随机种子')
@click.option('--min-v', type=float, default=None, help='参数实例的最小吸引力')
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='输出文件（默认标准输出）')
def gen_instance(example_id, random_kind, hard, params_path, products, positions, horizon, seed, min_v, out):
    """生成实例文件"""
    sources = [example_id is not None, random_kind is not None, hard,
               params_path is not None and example_id is None]
    if sum(bool(s) for s in sources) != 1:
        raise click.UsageError("choose exactly one of --example, --random, --hard, --from-params")

    min_v = get_config().ingest.min_v if min_v is None else min_v
    if example_id is not None and example_id <= 6:
        instance = example_instance(example_id)
    elif example_id is not None:
        if params_path is None:
            raise click.UsageError(f"--example {example_id} needs --from-params")
        instance = expedia_example(example_id, ExtractedParams.load(params_path), seed=seed, min_v=min_v)
    elif random_kind is not None:
        _require_shape(products, positions)
        instance = random_instance(products, positions, random_kind, seed)
    elif hard:
        _require_shape(products, positions)
        if horizon is None:
            raise click.UsageError("--hard needs --horizon")
        instance = hard_instance(products, positions, horizon)
    else:
        _require_shape(products, positions)
        instance = build_instance(ExtractedParams.load(params_path), products, positions, min_v=min_v, seed=seed)

    if out:
        dump_instance(instance, out)
        err_console.print(f"[green]✓[/green] wrote {instance.name} (N={instance.N}, K={instance.K}) to {out}")
    else:
        click.echo(dumps_instance(instance), nl=False)
    return 0


def _require_shape(products: Optional[int], positions: Optional[int]) -> None:
    if products is None or positions is None:
        raise click.UsageError("this source needs -n/--products and -k/--positions")


_SIM_OPTIONS = {
    "instance": "instance", "policy": "policy", "horizon": "horizon", "reps": "replications", "seed": "seed",
    "out": "out", "epsilon": "epsilon", "stride": "stride", "explore_c": "explore_c",
    "share_stream": "share_stream", "workers": "workers",
}


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='JSON 仿真配置文件')
@click.option('--instance', default=None, help='ex1..ex6、hard:N,K,T、random:N,K,kind,seed 或实例文件')
@click.option('--policy', type=click.Choice(POLICY_CHOICES), default=None, help='策略标识')
@click.option('--horizon', type=int, default=None, help='总轮数 T')
@click.option('--reps', type=int, default=None, help='重复次数')
@click.option('--seed', type=int, default=None, help='主种子')
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='输出 CSV')
@click.option('--epsilon', type=float, default=None, help='Dinkelbach 终止容差')
@click.option('--stride', type=int, default=None, help='输出抽样步长')
@click.option('--explore-c', type=float, default=None, help='E-P2MLE-UCB 探索系数')
@click.option('--share-stream', is_flag=True, default=None, help='所有重复共用同一随机流（调试）')
@click.option('--workers', type=int, default=None, help='并行进程数')
@click.pass_context
def simulate(ctx, config_path, **options):
    """运行仿真并写出累计遗憾 CSV"""
    settings = get_config().simulation
    data: Dict[str, Any] = {"replications": settings.replications, "seed": settings.seed,
                            "workers": settings.workers}
    if config_path:
        data.update(SimConfig.read_json_file(config_path))
    for option, key in _SIM_OPTIONS.items():
        if ctx.get_parameter_source(option) == ParameterSource.COMMANDLINE:
            data[key] = options[option]
    for required in ("instance", "policy", "horizon"):
        if data.get(required) is None:
            raise click.UsageError(f"--{required} is required (or provide it in --config)")

    sim_config = SimConfig.from_dict(data)
    table = run_replications(sim_config)
    if sim_config.out:
        err_console.print(f"[green]✓[/green] {table.policy} on {table.instance_name}: final mean regret "
                          f"{table.final_mean:.4f} ± {table.final_std:.4f} -> {sim_config.out}")
    else:
        click.echo(table.to_csv(), nl=False)
    return 0


@cli.command('extract-params')
@click.argument('log_path', type=click.Path(dir_okay=False))
@click.option('--out', type=click.Path(dir_okay=False), required=True, help='参数文件（JSON）')
@click.option('--min-position-obs', type=int, default=None, help='位置的最少随机展示数')
@click.option('--min-item-obs', type=int, default=None, help='商品的最少随机展示数')
@click.option('--price-quantile', type=float, default=None, help='价格上限分位数')
@click.option('--v-floor', type=float, default=None, help='吸引力下限')
@click.option('--k-limit', type=int, default=None, help='最多保留的位置数')
@click.option('--prop-id-column', default=None)
@click.option('--position-column', default=None)
@click.option('--click-column', default=None)
@click.option('--random-column', default=None)
@click.option('--price-column', default=None)
def extract_params(log_path, out, min_position_obs, min_item_obs, price_quantile, v_floor, k_limit,
                   prop_id_column, position_column, click_column, random_column, price_column):
    """从随机展示点击日志抽取 (θ, v, r)"""
    defaults = get_config().ingest
    columns = IngestConfig(
        prop_id_column=prop_id_column or defaults.prop_id_column,
        position_column=position_column or defaults.position_column,
        click_column=click_column or defaults.click_column,
        random_column=random_column or defaults.random_column,
        price_column=price_column or defaults.price_column,
    )
    log = load_impressions(log_path, columns)
    params = extract_parameters(
        log,
        min_position_obs=defaults.min_position_obs if min_position_obs is None else min_position_obs,
        min_item_obs=defaults.min_item_obs if min_item_obs is None else min_item_obs,
        price_quantile=defaults.price_quantile if price_quantile is None else price_quantile,
        v_floor=defaults.v_floor if v_floor is None else v_floor,
        k_limit=k_limit,
        theta_floor=defaults.theta_floor,
    )
    params.save(out)
    summary = log.summary()
    err_console.print(f"[green]✓[/green] {summary['rows_kept']} rows used, {summary['rows_skipped']} skipped; "
                      f"{len(params.positions)} positions, {len(params.item_v)} items -> {out}")
    return 0


@cli.command()
@click.option('--quick', is_flag=True, default=False, help='缩小样本规模')
def selftest(quick):
    """运行优化器与估计器自检"""
    results = run_selftest(quick)
    table = Table(title="PosMNL selftest")
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    table.add_column("Detail", style="white")
    for result in results:
        table.add_row(result.name, "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]", result.detail)
    err_console.print(table)
    return 0 if all(r.passed for r in results) else 1


@cli.command()
@click.argument('name', type=click.Choice(list(SUITES)))
@click.option('--horizon', type=int, default=20_000, help='总轮数 T')
@click.option('--reps', type=int, default=None, help='重复次数')
@click.option('--seed', type=int, default=None, help='主种子')
@click.option('--out-dir', type=click.Path(file_okay=False), required=True, help='输出目录')
@click.option('--params', 'params_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='参数文件（Expedia 套件需要）')
@click.option('--workers', type=int, default=None, help='并行进程数')
def suite(name, horizon, reps, seed, out_dir, params_path, workers):
    """运行预定义的对比实验套件"""
    settings = get_config().simulation
    result = run_suite(name, horizon,
                       replications=settings.replications if reps is None else reps,
                       seed=settings.seed if seed is None else seed,
                       out_dir=out_dir, params_path=params_path,
                       workers=settings.workers if workers is None else workers)
    table = Table(title=f"suite {name} (T={horizon})")
    table.add_column("Instance", style="cyan")
    table.add_column("Policy")
    table.add_column("Mean regret", justify="right")
    table.add_column("Std", justify="right")
    for instance_name, policy_name, mean, std in result.summary:
        table.add_row(instance_name, policy_name, f"{mean:.4f}", f"{std:.4f}")
    err_console.print(table)
    return 0


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI 入口：用法错误返回 2，领域错误返回 1"""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="posmnl", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        err_console.print("[red]Aborted[/red]")
        return 1
    except PosMNLException as e:
        err_console.print(f"[bold red]✗[/bold red] {e}")
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(cli_main())
