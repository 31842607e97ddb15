"""仿真与遗憾统计 - Simulation Harness

单次仿真：
    for t = 1..T:
        placement = policy.select(t)
        outcome   = sample_choice(instance, placement, env_rng)
        policy.observe(placement, outcome)
        regret_t  = R* - R(placement)

遗憾按期望收益计算（伪遗憾）：策略只看到抽样得到的选择，遗憾曲线不含抽样噪声。

重复实验：第 j 次重复使用 stream(seed, j, channel) 派生的独立随机流，
可以在进程池中并行执行；汇总前按重复编号排序，因此结果与调度无关。
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import EstimationConfig, OptimizerConfig, get_config

from ..utils.exceptions import OracleMismatchError, StorageError, ValidationError
from ..utils.logger import get_logger, get_run_logger
from ..utils.seeding import ENVIRONMENT_CHANNEL, POLICY_CHANNEL, make_stream
from .choice_model import Instance, Placement, expected_revenue, sample_choice
from .static_opt import brute_force_optimize, dinkelbach_optimize, enumeration_size

logger = get_logger(__name__)

REGRET_TOLERANCE = 1e-9
ORACLE_TOLERANCE = 1e-9
CROSS_CHECK_BUDGET = 100_000
FULL_TRACE_LIMIT = 10_000
CSV_HEADER = ("round", "mean_cum_regret", "std_cum_regret", "reps")


@dataclass
class SimConfig:
    """仿真配置（CLI 选项或 JSON 文件）"""
    instance: str
    policy: str
    horizon: int
    replications: int = 50
    seed: int = 0
    out: Optional[str] = None
    epsilon: float = 0.0
    stride: Optional[int] = None
    explore_c: Optional[float] = None
    share_stream: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}", field="horizon", value=self.horizon)
        if self.replications < 1:
            raise ValidationError(f"replications must be >= 1, got {self.replications}", field="replications",
                                  value=self.replications)
        if self.stride is not None and self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}", field="stride", value=self.stride)
        if self.epsilon < 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}", field="epsilon", value=self.epsilon)
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}", field="workers", value=self.workers)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"Unknown simulation config keys: {', '.join(unknown)}", field=unknown[0])
        missing = [name for name in ("instance", "policy", "horizon") if name not in data]
        if missing:
            raise ValidationError(f"Missing required simulation config key: {missing[0]}", field=missing[0])
        return cls(**data)

    @staticmethod
    def read_json_file(path: Union[str, Path]) -> Dict[str, Any]:
        """读取 JSON 配置文件为字典（允许只给出部分键）"""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise StorageError(f"Cannot read simulation config {path}: {e}", operation="read", path=str(path)) from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}",
                                  field="<json>") from e
        if not isinstance(data, dict):
            raise ValidationError("simulation config must be a JSON object", field="<root>")
        return data

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "SimConfig":
        return cls.from_dict(cls.read_json_file(path))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def resolved_stride(self, full_trace_limit: int = FULL_TRACE_LIMIT) -> int:
        if self.stride is not None:
            return self.stride
        if self.horizon <= full_trace_limit:
            return 1
        return math.ceil(self.horizon / full_trace_limit)


@dataclass
class RegretTrace:
    """单次仿真的逐轮伪遗憾"""
    instantaneous: np.ndarray
    optimum: Placement
    optimal_revenue: float

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.instantaneous)

    @property
    def horizon(self) -> int:
        return int(self.instantaneous.size)

    @property
    def final_regret(self) -> float:
        return float(self.instantaneous.sum())


@dataclass
class RegretTable:
    """多次重复的累计遗憾汇总"""
    rounds: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    reps: int
    instance_name: str = ""
    policy: str = ""

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_std(self) -> float:
        return float(self.std[-1])

    def rows(self) -> List[Tuple[int, float, float, int]]:
        return [(int(t), float(m), float(s), self.reps) for t, m, s in zip(self.rounds, self.mean, self.std)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "round": np.asarray(self.rounds, dtype=np.int64),
            "mean_cum_regret": np.asarray(self.mean, dtype=float),
            "std_cum_regret": np.asarray(self.std, dtype=float),
            "reps": np.full(len(self.rounds), self.reps, dtype=np.int64),
        }, columns=list(CSV_HEADER))

    def to_csv(self) -> str:
        """CSV 文本：LF 换行，浮点数用最短可往返表示"""
        return self.to_frame().to_csv(index=False, lineterminator="\n")

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(self.to_csv())
        except OSError as e:
            raise StorageError(f"Cannot write regret table {path}: {e}", operation="write", path=str(path)) from e
        return path


def oracle_optimum(instance: Instance, epsilon: float = 0.0, cross_check: bool = True,
                   cross_check_budget: int = CROSS_CHECK_BUDGET) -> Tuple[Placement, float]:
    """真实参数下的最优放置与最优收益

    可行方案数不超过 cross_check_budget 时与穷举结果核对。

    Raises:
        OracleMismatchError: 两种求解结果不一致
    """
    V = instance.attraction_matrix()
    result = dinkelbach_optimize(instance.revenues, V, epsilon=epsilon)
    if cross_check and enumeration_size(instance.N, instance.K) <= cross_check_budget:
        oracle = brute_force_optimize(instance.revenues, V, budget=cross_check_budget)
        if abs(oracle.revenue - result.revenue) > ORACLE_TOLERANCE:
            raise OracleMismatchError(
                f"Optimizer revenue {result.revenue!r} differs from brute force {oracle.revenue!r} on {instance.name}",
                fast_value=result.revenue, oracle_value=oracle.revenue,
            )
    logger.debug(f"Oracle optimum for {instance.name}: revenue={result.revenue!r} "
                 f"placement={result.placement.to_pairs()} iterations={result.iterations}")
    return result.placement, result.revenue


def run_simulation(instance: Instance, policy, horizon: int, rng: np.random.Generator,
                   optimum: Optional[Tuple[Placement, float]] = None) -> RegretTrace:
    """运行一次仿真，返回逐轮伪遗憾"""
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}", field="horizon", value=horizon)
    placement_star, revenue_star = optimum if optimum is not None else oracle_optimum(instance)

    revenue_cache: Dict[Tuple[Tuple[int, int], ...], float] = {}
    regrets = np.empty(horizon)
    for t in range(1, horizon + 1):
        placement = policy.select(t)
        value = revenue_cache.get(placement.key)
        if value is None:
            value = expected_revenue(instance, placement)
            revenue_cache[placement.key] = value
        outcome = sample_choice(instance, placement, rng)
        policy.observe(placement, outcome)
        regret = revenue_star - value
        if regret < -REGRET_TOLERANCE:
            raise OracleMismatchError(
                f"Round {t}: placement {placement.to_pairs()} beats the oracle optimum by {-regret!r}",
                fast_value=value, oracle_value=revenue_star,
            )
        regrets[t - 1] = regret

    return RegretTrace(regrets, placement_star, revenue_star)


def _run_replication(job: Tuple[SimConfig, Instance, Tuple[Placement, float], OptimizerConfig, EstimationConfig, int]
                     ) -> np.ndarray:
    from ..modules.policies import build_policy

    config, instance, optimum, optimizer, estimation, rep = job
    stream_index = 0 if config.share_stream else rep
    env_rng = make_stream(config.seed, stream_index, ENVIRONMENT_CHANNEL)
    policy_rng = make_stream(config.seed, stream_index, POLICY_CHANNEL)
    policy = build_policy(config.policy, instance, config.horizon, policy_rng, explore_c=config.explore_c,
                          estimation=estimation, optimizer=optimizer)

    run_logger = get_run_logger(__name__, rep, config.policy)
    trace = run_simulation(instance, policy, config.horizon, env_rng, optimum)
    run_logger.info(f"finished {config.horizon} rounds, cumulative regret {trace.final_regret:.4f}")
    return trace.cumulative


def run_replications(config: SimConfig, instance: Optional[Instance] = None) -> RegretTable:
    """运行全部重复实验并汇总（均值与总体标准差）"""
    from ..modules.instances import resolve_instance

    loaded = get_config()
    settings = loaded.simulation
    # 副本：--epsilon 只作用于本次运行
    optimizer = replace(loaded.optimizer)
    if config.epsilon:
        optimizer.epsilon = config.epsilon
    estimation = replace(loaded.estimation)
    instance = instance or resolve_instance(config.instance)
    optimum = oracle_optimum(instance, cross_check=settings.cross_check_oracle)
    logger.info(f"Simulating {config.policy} on {instance.name}: T={config.horizon}, "
                f"reps={config.replications}, seed={config.seed}, R*={optimum[1]:.6f}")

    jobs = [(config, instance, optimum, optimizer, estimation, rep) for rep in range(config.replications)]
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            # map 按提交顺序返回，与完成顺序无关
            cumulative = list(pool.map(_run_replication, jobs))
    else:
        cumulative = [_run_replication(job) for job in jobs]

    matrix = np.vstack(cumulative)
    stride = config.resolved_stride(settings.full_trace_limit)
    rounds = np.arange(stride, config.horizon + 1, stride)
    if rounds.size == 0 or rounds[-1] != config.horizon:
        rounds = np.append(rounds, config.horizon)

    columns = rounds - 1
    table = RegretTable(
        rounds=rounds,
        mean=matrix[:, columns].mean(axis=0),
        std=matrix[:, columns].std(axis=0),
        reps=config.replications,
        instance_name=instance.name,
        policy=config.policy,
    )
    logger.info(f"Final mean cumulative regret {table.final_mean:.4f} (std {table.final_std:.4f})")
    if config.out:
        table.write_csv(config.out)
    return table
