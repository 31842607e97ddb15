"""实例生成模块

- example_instance: 合成算例 1-6（1-3 为乘法模型，4-6 为一般模型）
- hard_instance: 下界构造，目标放置上的对吸引力为 (1+ε)/K，其余为 1/K，收益全为 1
- random_instance: 均匀随机实例（优化器校验与性质测试用）
- expedia_example: 由点击日志抽取的参数构造算例 7-12
- resolve_instance: CLI 使用的实例来源解析
"""

import math
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..core.choice_model import Instance, ModelKind, Placement
from ..core.instance_io import load_instance
from ..utils.exceptions import ValidationError
from ..utils.logger import get_logger

logger = get_logger(__name__)

EXAMPLE_IDS = tuple(range(1, 7))

# 算例 7-9 以已知 θ 运行，10-12 以未知 θ 运行
EXPEDIA_SHAPES: Dict[int, Tuple[int, int]] = {
    7: (30, 8),
    8: (50, 15),
    9: (70, 20),
    10: (20, 5),
    11: (30, 8),
    12: (50, 15),
}

_EXAMPLE_4 = (
    [0.9, 0.8, 0.9, 0.6, 0.5],
    [[0.4, 0.1, 0.1],
     [0.1, 0.5, 0.1],
     [0.2, 0.2, 0.6],
     [0.3, 0.1, 0.4],
     [0.1, 0.1, 0.1]],
)

_EXAMPLE_5 = (
    [0.9, 0.8, 0.9, 0.6, 0.5, 0.7, 0.4, 0.3],
    [[0.8, 0.6, 0.5, 0.2],
     [0.1, 0.5, 0.9, 0.3],
     [0.6, 0.2, 0.6, 0.1],
     [0.3, 0.1, 0.4, 0.5],
     [0.7, 0.1, 0.1, 0.8],
     [0.2, 0.5, 0.4, 0.6],
     [0.4, 0.3, 0.8, 0.2],
     [0.1, 0.1, 0.1, 0.1]],
)

_EXAMPLE_6 = (
    [0.9, 0.8, 0.9, 0.7, 0.6, 0.5, 0.7, 0.4, 0.6, 0.3],
    [[0.8, 0.6, 0.5, 0.2, 0.1],
     [0.4, 0.5, 0.9, 0.3, 0.2],
     [0.6, 0.3, 0.6, 0.1, 0.3],
     [0.3, 0.7, 0.4, 0.5, 0.4],
     [0.7, 0.1, 0.2, 0.8, 0.5],
     [0.3, 0.5, 0.4, 0.6, 0.4],
     [0.4, 0.4, 0.8, 0.2, 0.3],
     [0.6, 0.1, 0.2, 0.1, 0.1],
     [0.2, 0.3, 0.1, 0.4, 0.2],
     [0.5, 0.4, 0.3, 0.1, 0.1]],
)


def example_instance(example_id: int) -> Instance:
    """合成算例 1-6"""
    if example_id == 1:
        return Instance.multiplicative("ex1", revenues=[4 / 5, 3 / 4, 1 / 2],
                                       v=[1 / 4, 2 / 5, 4 / 5], theta=[1.0, 1 / 2])
    if example_id == 2:
        return Instance.multiplicative("ex2", revenues=[2 / 5, 1 / 5, 4 / 5, 3 / 5, 1 / 5],
                                       v=[1.0, 4 / 5, 3 / 5, 2 / 5, 1 / 5], theta=[1.0, 1 / 2, 1 / 3])
    if example_id == 3:
        products = np.arange(1, 31)
        positions = np.arange(1, 11)
        return Instance.multiplicative("ex3", revenues=(products + 9) / 40,
                                       v=(31 - products) / 30, theta=(11 - positions) / 10)
    general = {4: _EXAMPLE_4, 5: _EXAMPLE_5, 6: _EXAMPLE_6}
    if example_id in general:
        revenues, V = general[example_id]
        return Instance.general(f"ex{example_id}", revenues, V)
    raise ValidationError(f"Unknown example id {example_id}; expected one of 1..6",
                          field="example", value=example_id)


def hard_epsilon(n_products: int, n_positions: int, horizon: int) -> float:
    """ε = sqrt(KN / (243 T))"""
    return math.sqrt(n_positions * n_products / (243.0 * horizon))


def hard_instance(n_products: int, n_positions: int, horizon: int, target: Optional[Placement] = None,
                  seed: Optional[int] = None) -> Instance:
    """下界构造实例

    Args:
        target: 目标放置（0 起始，恰好 K 对）；为空时若给了 seed 则随机抽取，否则为 {(i, i)}

    Raises:
        ValidationError: T < 4KN/243（此时 ε > 1/2）、K = 1 或目标放置不合法
    """
    if not (1 <= n_positions <= n_products):
        raise ValidationError(f"K must satisfy 1 <= K <= N, got K={n_positions}, N={n_products}", field="K")
    if n_positions < 2:
        raise ValidationError("hard instances need K >= 2 so that (1+eps)/K stays within (0, 1]",
                              field="K", value=n_positions)
    bound = 4.0 * n_positions * n_products / 243.0
    if horizon < bound:
        raise ValidationError(f"hard instance needs T >= 4KN/243 = {bound:.4f} to keep eps in (0, 1/2], got T={horizon}",
                              field="T", value=horizon)

    if target is None:
        if seed is None:
            target = Placement(tuple((i, i) for i in range(n_positions)))
        else:
            products = np.random.default_rng(seed).choice(n_products, size=n_positions, replace=False)
            target = Placement(tuple((int(i), k) for k, i in enumerate(products)))
    target.validate_for(n_products, n_positions)
    if len(target) != n_positions:
        raise ValidationError(f"target placement must fill all K={n_positions} positions, got {len(target)}",
                              field="target")

    epsilon = hard_epsilon(n_products, n_positions, horizon)
    V = np.full((n_products, n_positions), 1.0 / n_positions)
    for i, k in target.pairs:
        V[i, k] = (1.0 + epsilon) / n_positions

    metadata = {"epsilon": epsilon, "horizon": int(horizon), "target": target.to_pairs()}
    return Instance.general(f"hard-N{n_products}-K{n_positions}-T{horizon}", np.ones(n_products), V, metadata)


def random_instance(n_products: int, n_positions: int, kind: Union[str, ModelKind] = ModelKind.MULTIPLICATIVE,
                    seed: Optional[int] = None) -> Instance:
    """均匀随机实例，同一种子得到同一实例"""
    try:
        kind = ModelKind(kind) if not isinstance(kind, ModelKind) else kind
    except ValueError as e:
        raise ValidationError(f"Unknown model kind {kind!r}", field="kind", value=kind) from e
    if not (1 <= n_positions <= n_products):
        raise ValidationError(f"K must satisfy 1 <= K <= N, got K={n_positions}, N={n_products}", field="K")

    rng = np.random.default_rng(seed)
    revenues = rng.random(n_products)
    name = f"random-{kind.value}-N{n_products}-K{n_positions}-s{seed}"
    # 1 - U 落在 (0, 1]
    if kind == ModelKind.MULTIPLICATIVE:
        v = 1.0 - rng.random(n_products)
        theta = 1.0 - rng.random(n_positions)
        return Instance.multiplicative(name, revenues, v, theta / theta.max())
    return Instance.general(name, revenues, 1.0 - rng.random((n_products, n_positions)))


def expedia_example(example_id: int, params, seed: int = 0, min_v: float = 0.1) -> Instance:
    """由抽取参数构造算例 7-12"""
    from .expedia_ingest import build_instance

    if example_id not in EXPEDIA_SHAPES:
        raise ValidationError(f"Unknown calibrated example id {example_id}; expected one of 7..12",
                              field="example", value=example_id)
    n_products, n_positions = EXPEDIA_SHAPES[example_id]
    instance = build_instance(params, n_products, n_positions, min_v=min_v, seed=seed)
    metadata = dict(instance.metadata, example=example_id, known_theta=example_id <= 9)
    return Instance(f"ex{example_id}", instance.revenues, instance.model, metadata)


def _parse_ints(fields: str, count: int, source: str):
    parts = [p.strip() for p in fields.split(",")]
    if len(parts) != count:
        raise ValidationError(f"Instance source {source!r} needs {count} comma-separated fields", field="instance",
                              value=source)
    return parts


def resolve_instance(source: Union[str, Path]) -> Instance:
    """解析实例来源

    支持：ex1..ex6、hard:N,K,T、random:N,K,kind,seed 以及实例文件路径
    """
    text = str(source).strip()
    lowered = text.lower()
    try:
        if lowered.startswith("ex") and lowered[2:].isdigit():
            return example_instance(int(lowered[2:]))
        if lowered.startswith("hard:"):
            n, k, t = _parse_ints(text[5:], 3, text)
            return hard_instance(int(n), int(k), int(t))
        if lowered.startswith("random:"):
            n, k, kind, seed = _parse_ints(text[7:], 4, text)
            return random_instance(int(n), int(k), kind, int(seed))
    except ValueError as e:
        raise ValidationError(f"Malformed instance source {text!r}: {e}", field="instance", value=text) from e
    return load_instance(text)
