"""静态分配与定位优化 - Static Optimization

给定收益 r 与吸引力矩阵 V（N x K），求使期望收益
    f(x) = Σ r_i v_{i,k} x_{i,k} / (1 + Σ v_{i,k} x_{i,k})
最大的部分匹配 x（每个商品至多一个位置，每个位置至多一个商品）。

求解方式：
- Dinkelbach 迭代：F(λ) = max_x Σ (r_i - λ) v_{i,k} x_{i,k} - λ，最优收益是 F 的唯一根
- 每个 λ 的子问题是最大权二部匹配，只保留权重严格为正的边
- 穷举法作为小规模实例的校验基准

平局规则：在等值解中优先选按 (商品, 位置) 排序后字典序最小的对列表。
穷举法逐个比较；匹配求解器先检查最优解是否唯一，不唯一时按商品顺序逐对固定，
每次用剩余子问题的最优值判断固定后是否仍能达到最优。
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..utils.exceptions import ConvergenceError, EnumerationBudgetError, ValidationError
from ..utils.logger import get_logger
from .choice_model import Placement

logger = get_logger(__name__)

ZERO_TOLERANCE = 1e-12
MAX_ITERATIONS = 100
ENUMERATION_BUDGET = 10 ** 7
TIE_TOLERANCE = 1e-12


@dataclass
class OptimizationResult:
    """优化结果"""
    placement: Placement
    revenue: float
    iterations: int
    lambda_trace: List[float] = field(default_factory=list)


def _as_weight_matrix(weights) -> np.ndarray:
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
        raise ValidationError(f"weight matrix must be a non-empty 2-D array, got shape {W.shape}", field="weights")
    if not np.all(np.isfinite(W)):
        raise ValidationError("weight matrix contains non-finite entries", field="weights")
    return W


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_TOLERANCE * max(1.0, abs(a), abs(b))


def _best_weight(P: np.ndarray) -> float:
    """非负权矩阵的最大匹配权重"""
    if P.size == 0 or not P.any():
        return 0.0
    rows, cols = linear_sum_assignment(P, maximize=True)
    return float(P[rows, cols].sum())


def _lexicographic_minimum(W: np.ndarray, pairs: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    """最优匹配中排序后字典序最小的一个

    pairs 是任一最优匹配。若去掉其中任一条边都会使最优值下降，最优解唯一，直接返回；
    否则按商品从小到大逐个决定：对商品 i 依次尝试空闲位置 k，固定 (i, k) 后剩余商品
    （编号大于 i）在剩余位置上的最优补全若仍能达到最优值，就保留 (i, k)。
    """
    P = np.where(W > 0.0, W, 0.0)
    total = float(sum(P[i, k] for i, k in pairs))
    if not pairs:
        return []

    unique = True
    for i, k in pairs:
        masked = P.copy()
        masked[i, k] = 0.0
        if _same(_best_weight(masked), total):
            unique = False
            break
    if unique:
        return sorted(pairs)

    n_products, n_positions = P.shape
    chosen: List[Tuple[int, int]] = []
    used: set = set()
    fixed = 0.0
    for i in range(n_products):
        if _same(fixed, total):
            break
        free = [l for l in range(n_positions) if l not in used]
        for k in free:
            if P[i, k] <= 0.0:
                continue
            rest = _best_weight(P[i + 1:][:, [l for l in free if l != k]])
            if _same(fixed + P[i, k] + rest, total):
                chosen.append((i, k))
                used.add(k)
                fixed += P[i, k]
                break
    return chosen


def _solve_matching(W: np.ndarray, canonical: bool) -> Tuple[List[Tuple[int, int]], float]:
    positive = np.where(W > 0.0, W, 0.0)
    if not positive.any():
        return [], 0.0
    # 矩形指派：零权重等价于补零的虚拟行列，求解后丢弃
    rows, cols = linear_sum_assignment(positive, maximize=True)
    pairs = [(int(i), int(k)) for i, k in zip(rows, cols) if W[i, k] > 0.0]
    if canonical:
        pairs = _lexicographic_minimum(W, pairs)
    total = float(sum(W[i, k] for i, k in pairs))
    return pairs, total


def max_weight_matching(weights) -> Tuple[Placement, float]:
    """最大权二部匹配（只用正权边）

    Args:
        weights: N x K 边权矩阵，可以为负

    Returns:
        (放置方案, 匹配总权重)
    """
    W = _as_weight_matrix(weights)
    pairs, total = _solve_matching(W, canonical=True)
    return Placement(tuple(pairs)), total


def _validate_problem(revenues, V) -> Tuple[np.ndarray, np.ndarray]:
    r = np.asarray(revenues, dtype=float)
    A = np.asarray(V, dtype=float)
    if r.ndim != 1 or A.ndim != 2 or A.shape[0] != r.size:
        raise ValidationError(f"shape mismatch: revenues {r.shape}, attractions {A.shape}", field="V")
    if A.shape[1] < 1 or r.size < 1:
        raise ValidationError("need N >= 1 and K >= 1", field="V")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(A))):
        raise ValidationError("revenues and attractions must be finite", field="V")
    if r.min() < 0.0 or r.max() > 1.0:
        raise ValidationError("revenues must lie in [0, 1]", field="revenues")
    if A.min() < 0.0:
        raise ValidationError("attractions must be non-negative", field="V")
    return r, A


def _revenue_of(r: np.ndarray, A: np.ndarray, pairs: Sequence[Tuple[int, int]]) -> float:
    if not pairs:
        return 0.0
    products = [i for i, _ in pairs]
    positions = [k for _, k in pairs]
    alphas = A[products, positions]
    return float(np.dot(r[products], alphas) / (1.0 + alphas.sum()))


def dinkelbach_optimize(revenues, V, epsilon: float = 0.0, max_iterations: int = MAX_ITERATIONS,
                        zero_tolerance: float = ZERO_TOLERANCE) -> OptimizationResult:
    """Dinkelbach 求根 + 最大权匹配，求解联合分配与定位问题

    λ 从下界 0 出发单调不减；当 |Σ w x* - λ| <= max(epsilon, zero_tolerance) 或
    λ 的更新不再增大（浮点意义下的不动点）时停止。

    Raises:
        ConvergenceError: 超过迭代上限，异常携带 λ 轨迹
    """
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}", field="epsilon", value=epsilon)
    r, A = _validate_problem(revenues, V)
    tolerance = max(epsilon, zero_tolerance)

    lam = 0.0
    trace: List[float] = []
    pairs: List[Tuple[int, int]] = []
    for iteration in range(1, max_iterations + 1):
        trace.append(lam)
        W = (r - lam)[:, None] * A
        pairs, weight = _solve_matching(W, canonical=False)
        gap = weight - lam
        logger.debug(f"dinkelbach iteration {iteration}: lambda={lam!r} F={gap!r} |S|={len(pairs)}")
        if abs(gap) <= tolerance:
            break
        updated = _revenue_of(r, A, pairs)
        if updated <= lam:
            break
        lam = updated
    else:
        raise ConvergenceError(f"Dinkelbach did not converge within {max_iterations} iterations",
                               lambda_trace=trace)

    pairs = _lexicographic_minimum((r - lam)[:, None] * A, pairs)
    return OptimizationResult(
        placement=Placement(tuple(pairs)),
        revenue=_revenue_of(r, A, pairs),
        iterations=len(trace),
        lambda_trace=trace,
    )


def enumeration_size(n_products: int, n_positions: int) -> int:
    """可行放置方案总数 Σ_{m=0}^{K} C(N, m) K! / (K - m)!"""
    upper = min(n_products, n_positions)
    return sum(math.comb(n_products, m) * math.perm(n_positions, m) for m in range(upper + 1))


def brute_force_optimize(revenues, V, budget: int = ENUMERATION_BUDGET) -> OptimizationResult:
    """穷举所有可行放置方案（校验用）

    Raises:
        EnumerationBudgetError: 可行方案数超过预算
    """
    r, A = _validate_problem(revenues, V)
    n_products, n_positions = A.shape
    size = enumeration_size(n_products, n_positions)
    if size > budget:
        raise EnumerationBudgetError(f"brute force needs {size} placements, budget is {budget}",
                                     size=size, budget=budget)

    best_pairs: Tuple[Tuple[int, int], ...] = ()
    best_revenue = 0.0
    for m in range(1, min(n_products, n_positions) + 1):
        for products in itertools.combinations(range(n_products), m):
            for positions in itertools.permutations(range(n_positions), m):
                pairs = tuple(zip(products, positions))
                value = _revenue_of(r, A, pairs)
                if value > best_revenue + TIE_TOLERANCE:
                    best_pairs, best_revenue = pairs, value
                elif _same(value, best_revenue) and pairs < best_pairs:
                    best_pairs, best_revenue = pairs, max(value, best_revenue)

    return OptimizationResult(
        placement=Placement(best_pairs),
        revenue=_revenue_of(r, A, best_pairs),
        iterations=size,
        lambda_trace=[_revenue_of(r, A, best_pairs)],
    )


def optimal_revenue(revenues, V) -> float:
    return dinkelbach_optimize(revenues, V).revenue
