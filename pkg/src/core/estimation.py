"""成对统计与置信上界 - Pairwise Estimation

把每次顾客交互看成"展示商品 vs 外部选项"的成对比较：
- n[i][k]: 商品 i 在位置 k 展示且顾客选了 i 或离开的次数
- w[i][k]: 其中顾客选了 i 的次数

乘法模型（θ 已知）：跨位置合并的成对似然，得分函数
    S(v) = Σ_k (w_k - n_k p_k(v)),  p_k(v) = v θ_k / (1 + v θ_k)
单调递减，其根截断到 [0, 1] 即为截断MLE；UCB 为
    v̂ + C4 sqrt(v̂ ell / D) + C5 ell / D,  D = Σ_k n_k θ_k
一般模型：每个 (i, k) 对独立，Bernstein 型 p 的上界，再经 p/(1-p) 转换到 v。

决策时只用到 C4、C5 与 ell、L；C1-C3、C6、C7 作为只读常量公开。
"""

import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from ..utils.exceptions import PreconditionError, ValidationError
from .choice_model import ChoiceOutcome, ModelKind, Placement

# 集中不等式常量
C1 = 8.0
C2 = 8.0 / 3.0
C3 = 56.0 / 3.0
C4 = 2.0 * C1
C5 = C1 ** 2 + C2 + 2.0 * C1 * math.sqrt(C2)
C6 = math.sqrt(2.0) * C4 + C1
C7 = C4 * math.sqrt(C3) + C5 + C2

ROOT_TOLERANCE = 1e-10
BRACKET_CAP = 2.0 ** 60


class StatsRow(NamedTuple):
    """单个商品在各位置上的成对计数"""
    n: np.ndarray
    w: np.ndarray


class PairwiseStats:
    """N x K 成对计数，只增不减，0 <= w <= n"""

    def __init__(self, n_products: int, n_positions: int):
        if n_products < 1 or n_positions < 1:
            raise ValidationError(f"stats need N >= 1 and K >= 1, got ({n_products}, {n_positions})", field="shape")
        self.n = np.zeros((n_products, n_positions), dtype=np.int64)
        self.w = np.zeros((n_products, n_positions), dtype=np.int64)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n.shape  # type: ignore[return-value]

    def row(self, i: int) -> StatsRow:
        return StatsRow(self.n[i], self.w[i])

    def total_events(self) -> int:
        return int(self.n.sum())


def update_stats(stats: PairwiseStats, placement: Placement, outcome: ChoiceOutcome) -> PairwiseStats:
    """按一轮观测更新成对计数（原地更新并返回）

    - 选了商品 i：只有 (i, σ(i)) 的 n 与 w 各加一
    - 外部选项：所有展示对的 n 加一
    """
    if outcome.is_outside:
        for i, k in placement.pairs:
            stats.n[i, k] += 1
        return stats

    k = placement.position_of(outcome.chosen)
    if k is None:
        raise ValidationError(f"outcome {outcome.chosen} is not part of the offered placement",
                              field="outcome", value=outcome.chosen)
    stats.n[outcome.chosen, k] += 1
    stats.w[outcome.chosen, k] += 1
    return stats


def _row_arrays(row: StatsRow, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = np.asarray(row.n, dtype=float)
    w = np.asarray(row.w, dtype=float)
    t = np.asarray(theta, dtype=float)
    if n.shape != t.shape or w.shape != t.shape:
        raise ValidationError(f"stats row shape {n.shape} does not match theta shape {t.shape}", field="theta")
    return n, w, t


def effective_exposure(row: StatsRow, theta) -> float:
    """D = Σ_k n_k θ_k"""
    n, _, t = _row_arrays(row, theta)
    return float(np.dot(n, t))


def score(v: float, row: StatsRow, theta) -> float:
    """成对似然得分 Σ_k (w_k - n_k p_k(v))"""
    if v < 0:
        raise ValidationError(f"score is defined for v >= 0, got {v}", field="v", value=v)
    n, w, t = _row_arrays(row, theta)
    vt = v * t
    return float(np.sum(w - n * vt / (1.0 + vt)))


def solve_score_root(row: StatsRow, theta, tolerance: float = 1e-12,
                     bracket_cap: float = BRACKET_CAP) -> float:
    """得分函数的根（未截断）；全胜时返回 inf

    Raises:
        PreconditionError: D = 0（调用方应走未探索分支）
    """
    n, w, t = _row_arrays(row, theta)
    if np.dot(n, t) <= 0:
        raise PreconditionError("effective exposure is zero; the product has no pairwise observations",
                                operation="solve_clipped_mle")
    if w.sum() == 0:
        return 0.0
    if w.sum() == n.sum():
        return math.inf

    hi = 1.0
    value = score(hi, row, theta)
    while value > 0:
        hi *= 2.0
        if hi > bracket_cap:
            return math.inf
        value = score(hi, row, theta)
    if value == 0:
        return hi
    return float(brentq(score, 0.0, hi, args=(row, theta), xtol=tolerance))


def solve_clipped_mle(row: StatsRow, theta, tolerance: float = 1e-12) -> float:
    """截断MLE v̂ = min(ṽ, 1)"""
    return min(solve_score_root(row, theta, tolerance), 1.0)


def solve_clipped_mle_batch(n, w, theta, tolerance: float = ROOT_TOLERANCE) -> np.ndarray:
    """所有商品的截断MLE（向量化二分，只在 [0, 1] 上求根）

    D = 0 的商品返回 NaN。
    """
    n = np.asarray(n, dtype=float)
    w = np.asarray(w, dtype=float)
    t = np.asarray(theta, dtype=float)
    exposure = n @ t
    estimates = np.full(n.shape[0], np.nan)

    def batch_score(v: np.ndarray, rows: np.ndarray) -> np.ndarray:
        vt = v[:, None] * t[None, :]
        return (w[rows] - n[rows] * vt / (1.0 + vt)).sum(axis=1)

    active = np.flatnonzero(exposure > 0)
    if active.size == 0:
        return estimates
    at_one = batch_score(np.ones(active.size), active) >= 0
    no_wins = w[active].sum(axis=1) == 0
    estimates[active[at_one]] = 1.0
    estimates[active[no_wins & ~at_one]] = 0.0

    interior = active[~at_one & ~no_wins]
    if interior.size:
        lo = np.zeros(interior.size)
        hi = np.ones(interior.size)
        for _ in range(int(math.ceil(math.log2(1.0 / tolerance))) + 1):
            mid = 0.5 * (lo + hi)
            positive = batch_score(mid, interior) > 0
            lo = np.where(positive, mid, lo)
            hi = np.where(positive, hi, mid)
        estimates[interior] = 0.5 * (lo + hi)
    return estimates


def ucb_multiplicative(v_hat: float, exposure: float, ell: float) -> float:
    """v̂ + C4 sqrt(v̂ ell / D) + C5 ell / D"""
    if exposure <= 0:
        raise PreconditionError(f"UCB needs positive effective exposure, got {exposure}", operation="ucb_multiplicative")
    if ell <= 0:
        raise PreconditionError(f"UCB needs a positive log term, got {ell}", operation="ucb_multiplicative")
    return v_hat + C4 * math.sqrt(v_hat * ell / exposure) + C5 * ell / exposure


def ucb_multiplicative_vector(v_hat, exposure, ell: float) -> np.ndarray:
    """逐商品的乘法模型UCB；D = 0 的商品取 1"""
    v_hat = np.asarray(v_hat, dtype=float)
    exposure = np.asarray(exposure, dtype=float)
    ucb = np.ones_like(exposure)
    seen = exposure > 0
    v = v_hat[seen]
    d = exposure[seen]
    ucb[seen] = v + C4 * np.sqrt(v * ell / d) + C5 * ell / d
    return ucb


def ucb_general(n: int, w: int, L: float) -> Tuple[float, float]:
    """一般模型单个 (i, k) 对的 (p_ucb, v_ucb)"""
    if n < 1:
        raise PreconditionError("pair has no pairwise observations; its UCB is fixed at 1", operation="ucb_general")
    if not (0 <= w <= n):
        raise ValidationError(f"wins must satisfy 0 <= w <= n, got w={w}, n={n}", field="w", value=w)
    p_hat = w / n
    p_ucb = min(p_hat + 2.0 * math.sqrt(p_hat * (1.0 - p_hat) * L / n) + 6.0 * L / n, 0.5)
    return p_ucb, p_ucb / (1.0 - p_ucb)


def ucb_general_matrix(n, w, L: float) -> np.ndarray:
    """一般模型所有对的 v_ucb；n = 0 的对取 1"""
    n = np.asarray(n, dtype=float)
    w = np.asarray(w, dtype=float)
    v_ucb = np.ones_like(n)
    seen = n > 0
    counts = n[seen]
    p_hat = w[seen] / counts
    p_ucb = np.minimum(p_hat + 2.0 * np.sqrt(p_hat * (1.0 - p_hat) * L / counts) + 6.0 * L / counts, 0.5)
    v_ucb[seen] = p_ucb / (1.0 - p_ucb)
    return v_ucb


@dataclass(frozen=True)
class ConfidenceParams:
    """置信参数；一次运行中按 (T, N, K, θ_min) 计算一次后冻结"""
    kind: ModelKind
    horizon: int
    delta: float
    c: Optional[float] = None
    ell: Optional[float] = None
    L: Optional[float] = None

    @property
    def constants(self) -> Dict[str, float]:
        return {"C1": C1, "C2": C2, "C3": C3, "C4": C4, "C5": C5, "C6": C6, "C7": C7}


def confidence_params(horizon: int, n_products: int, n_positions: int, theta_min: Optional[float] = None,
                      kind: ModelKind = ModelKind.MULTIPLICATIVE) -> ConfidenceParams:
    """乘法模型：δ = 2/(3NT)，c = 2(⌈log2(T/θ_min)⌉ + 1)，ell = log(c/δ)
    一般模型：δ = 2/(3KNT)，L = log(2(⌈log2 T⌉ + 1)/δ)
    """
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}", field="T", value=horizon)
    if n_products < 1 or n_positions < 1:
        raise ValidationError("N and K must be positive", field="N")

    if kind == ModelKind.MULTIPLICATIVE:
        if theta_min is None or not (0 < theta_min <= 1):
            raise ValidationError(f"theta_min must lie in (0, 1], got {theta_min}", field="theta_min", value=theta_min)
        delta = 2.0 / (3.0 * n_products * horizon)
        c = 2.0 * (math.ceil(math.log2(horizon / theta_min)) + 1)
        return ConfidenceParams(kind, horizon, delta, c=c, ell=math.log(c / delta))

    delta = 2.0 / (3.0 * n_positions * n_products * horizon)
    L = math.log(2.0 * (math.ceil(math.log2(horizon)) + 1) / delta)
    return ConfidenceParams(kind, horizon, delta, L=L)
