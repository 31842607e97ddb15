"""对比实验套件

每个套件是 (实例集合, 策略集合) 的笛卡尔积，逐对运行 run_replications，
每对写一个遗憾 CSV，最后汇总末轮均值与标准差到 summary.csv。

套件：
- known-theta      算例 1-3，p2mle 对比 epoch-ucb-v
- unknown-theta    算例 1-3，ep2mle
- general          算例 4-6，gp2 对比 epoch-ucb-gen
- expedia-known    算例 7-9（由参数文件构造），p2mle 对比 epoch-ucb-v
- expedia-unknown  算例 10-12，ep2mle
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd

from ..core.choice_model import Instance
from ..core.simulator import SimConfig, run_replications
from ..utils.exceptions import StorageError, ValidationError
from ..utils.logger import get_logger
from .expedia_ingest import ExtractedParams
from .instances import example_instance, expedia_example
from .policies import PolicyKind

logger = get_logger(__name__)

SUMMARY_HEADER = ("instance", "policy", "horizon", "reps", "mean_cum_regret", "std_cum_regret")


@dataclass(frozen=True)
class SuiteDefinition:
    """套件定义"""
    name: str
    examples: Tuple[int, ...]
    policies: Tuple[PolicyKind, ...]

    @property
    def needs_params(self) -> bool:
        return any(example >= 7 for example in self.examples)


SUITES: Dict[str, SuiteDefinition] = {
    suite.name: suite for suite in (
        SuiteDefinition("known-theta", (1, 2, 3), (PolicyKind.P2MLE, PolicyKind.EPOCH_UCB_V)),
        SuiteDefinition("unknown-theta", (1, 2, 3), (PolicyKind.EP2MLE,)),
        SuiteDefinition("general", (4, 5, 6), (PolicyKind.GP2, PolicyKind.EPOCH_UCB_GEN)),
        SuiteDefinition("expedia-known", (7, 8, 9), (PolicyKind.P2MLE, PolicyKind.EPOCH_UCB_V)),
        SuiteDefinition("expedia-unknown", (10, 11, 12), (PolicyKind.EP2MLE,)),
    )
}


@dataclass
class SuiteResult:
    """套件输出"""
    name: str
    csv_paths: List[Path] = field(default_factory=list)
    summary: List[Tuple[str, str, float, float]] = field(default_factory=list)
    summary_path: Optional[Path] = None


def _suite_instances(suite: SuiteDefinition, params_path: Optional[Union[str, Path]], seed: int) -> List[Instance]:
    if not suite.needs_params:
        return [example_instance(example) for example in suite.examples]
    if params_path is None:
        raise ValidationError(f"Suite {suite.name} needs a parameters file (--params)", field="params")
    params = ExtractedParams.load(params_path)
    return [expedia_example(example, params, seed=seed) for example in suite.examples]


def run_suite(name: str, horizon: int, replications: int, seed: int, out_dir: Union[str, Path],
              params_path: Optional[Union[str, Path]] = None, workers: int = 1) -> SuiteResult:
    """运行一个对比套件"""
    if name not in SUITES:
        raise ValidationError(f"Unknown suite {name!r}; expected one of: {', '.join(SUITES)}", field="suite",
                              value=name)
    suite = SUITES[name]
    out_dir = Path(out_dir)
    result = SuiteResult(name)

    for instance in _suite_instances(suite, params_path, seed):
        for policy in suite.policies:
            config = SimConfig(instance=instance.name, policy=policy.value, horizon=horizon,
                               replications=replications, seed=seed, workers=workers,
                               out=str(out_dir / f"{instance.name}__{policy.value}.csv"))
            table = run_replications(config, instance=instance)
            result.csv_paths.append(Path(config.out))
            result.summary.append((instance.name, policy.value, table.final_mean, table.final_std))
            logger.info(f"[{name}] {instance.name} / {policy.value}: final mean regret {table.final_mean:.4f}")

    result.summary_path = out_dir / "summary.csv"
    rows = [(instance_name, policy_name, horizon, replications, mean, std)
            for instance_name, policy_name, mean, std in result.summary]
    try:
        pd.DataFrame(rows, columns=list(SUMMARY_HEADER)).to_csv(result.summary_path, index=False,
                                                                lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write suite summary {result.summary_path}: {e}", operation="write",
                           path=str(result.summary_path)) from e
    return result
