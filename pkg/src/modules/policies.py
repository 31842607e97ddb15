"""学习策略模块 - Bandit Policies

每个策略都是一个状态机，对外只有两个动作：
    placement = policy.select(t)
    policy.observe(placement, outcome)
两者必须严格交替，observe 收到的必须是 select 刚返回的放置方案。

策略一览：
- P2MLEUCB     θ 已知的乘法模型：逐商品截断MLE + UCB，每轮重新求最优放置
- GP2UCB       一般模型：逐 (商品, 位置) 对的 UCB
- EP2MLEUCB    θ 未知：先做 ⌈c√T⌉ 轮均匀随机探索估计 θ̂，再以 θ̂ 运行 P2MLEUCB
- EpochUCB     基线：同一放置方案一直展示到顾客离开（一个 epoch），只在 epoch 边界重新优化

所有策略只看到实例的公开信息（收益、位置数、θ 是否已知），看不到真实吸引力。
override_attractions 是调试入口：用给定矩阵代替 UCB，此时 select 每轮都返回该矩阵下的最优解。
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from config.settings import EstimationConfig, OptimizerConfig

from ..core.choice_model import ChoiceOutcome, Instance, ModelKind, Placement
from ..core.estimation import (
    PairwiseStats,
    confidence_params,
    solve_clipped_mle_batch,
    ucb_general_matrix,
    ucb_multiplicative_vector,
    update_stats,
)
from ..core.static_opt import dinkelbach_optimize
from ..utils.exceptions import ProtocolError, ValidationError
from ..utils.logger import get_logger
from ..utils.seeding import as_generator

logger = get_logger(__name__)

EPOCH_CONFIDENCE_SCALE = 48.0


class PolicyKind(Enum):
    """策略标识（CLI 使用）"""
    P2MLE = "p2mle"
    GP2 = "gp2"
    EP2MLE = "ep2mle"
    EPOCH_UCB_V = "epoch-ucb-v"
    EPOCH_UCB_GEN = "epoch-ucb-gen"

    @property
    def requires_multiplicative(self) -> bool:
        """是否只能用于乘法模型实例"""
        return self in (PolicyKind.P2MLE, PolicyKind.EP2MLE, PolicyKind.EPOCH_UCB_V)


class PolicyPhase(Enum):
    """E-P2MLE-UCB 所处阶段"""
    EXPLORATION = "exploration"
    EXPLOITATION = "exploitation"


@dataclass
class ThetaEstimate:
    """位置效应估计；degenerate 表示没有可用数据，θ̂ 退化为全 1"""
    theta: np.ndarray
    degenerate: bool = False


def _validate_theta(theta, n_positions: Optional[int] = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 1:
        raise ValidationError("theta must be a non-empty vector", field="theta")
    if n_positions is not None and theta.size != n_positions:
        raise ValidationError(f"theta has length {theta.size}, expected K={n_positions}", field="theta")
    if not np.all(np.isfinite(theta)) or theta.min() <= 0 or theta.max() > 1:
        raise ValidationError("theta entries must lie in (0, 1]", field="theta")
    return theta


class Policy(ABC):
    """策略基类：负责 select/observe 的交替协议与调试覆盖"""

    kind: PolicyKind

    def __init__(self, revenues, n_positions: int, horizon: int, optimizer: Optional[OptimizerConfig] = None):
        self.revenues = np.asarray(revenues, dtype=float)
        self.N = int(self.revenues.size)
        self.K = int(n_positions)
        if not (1 <= self.K <= self.N):
            raise ValidationError(f"K must satisfy 1 <= K <= N, got K={self.K}, N={self.N}", field="K")
        if horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {horizon}", field="T", value=horizon)
        self.horizon = int(horizon)
        self.optimizer = optimizer or OptimizerConfig()

        self.rounds_played = 0
        self.last_ucb: Optional[np.ndarray] = None
        self._pending: Optional[Placement] = None
        self._override: Optional[np.ndarray] = None
        self._override_placement: Optional[Placement] = None

    @property
    def name(self) -> str:
        return self.kind.value

    def select(self, t: int) -> Placement:
        """第 t 轮的放置方案"""
        if self._pending is not None:
            raise ProtocolError(f"select({t}) called again before observe", policy_name=self.name)
        if self._override is not None:
            if self._override_placement is None:
                self._override_placement = self._optimize(self._override)
            placement = self._override_placement
        else:
            placement = self._select(t)
        self._pending = placement
        return placement

    def observe(self, placement: Placement, outcome: ChoiceOutcome) -> None:
        """接收本轮顾客选择"""
        if self._pending is None:
            raise ProtocolError("observe called before select", policy_name=self.name)
        if placement != self._pending:
            raise ProtocolError("observe received a placement that select did not return", policy_name=self.name)
        self._pending = None
        self._observe(placement, outcome)
        self.rounds_played += 1

    def override_attractions(self, V) -> None:
        """用给定的 N x K 吸引力矩阵代替 UCB（None 取消覆盖）"""
        if V is None:
            self._override = None
            self._override_placement = None
            return
        matrix = np.asarray(V, dtype=float)
        if matrix.shape != (self.N, self.K):
            raise ValidationError(f"override matrix must have shape {(self.N, self.K)}, got {matrix.shape}",
                                  field="V")
        self._override = matrix
        self._override_placement = None

    def _optimize(self, V) -> Placement:
        result = dinkelbach_optimize(
            self.revenues, V,
            epsilon=self.optimizer.epsilon,
            max_iterations=self.optimizer.max_iterations,
            zero_tolerance=self.optimizer.zero_tolerance,
        )
        return result.placement

    @abstractmethod
    def _select(self, t: int) -> Placement:
        ...

    @abstractmethod
    def _observe(self, placement: Placement, outcome: ChoiceOutcome) -> None:
        ...


class P2MLEUCB(Policy):
    """θ 已知时的成对MLE-UCB策略"""

    kind = PolicyKind.P2MLE

    def __init__(self, revenues, theta, horizon: int, estimation: Optional[EstimationConfig] = None,
                 optimizer: Optional[OptimizerConfig] = None):
        theta = _validate_theta(theta)
        super().__init__(revenues, theta.size, horizon, optimizer)
        self.theta = theta
        self.estimation = estimation or EstimationConfig()
        self.params = confidence_params(self.horizon, self.N, self.K, float(theta.min()), ModelKind.MULTIPLICATIVE)
        self.stats = PairwiseStats(self.N, self.K)
        self.last_estimate: Optional[np.ndarray] = None

    def estimates(self) -> np.ndarray:
        """当前截断MLE；未展示过的商品为 NaN"""
        return solve_clipped_mle_batch(self.stats.n, self.stats.w, self.theta, self.estimation.root_tolerance)

    def _select(self, t: int) -> Placement:
        exposure = self.stats.n @ self.theta
        v_hat = self.estimates()
        self.last_estimate = v_hat
        v_ucb = ucb_multiplicative_vector(np.nan_to_num(v_hat), exposure, self.params.ell)
        self.last_ucb = v_ucb
        return self._optimize(np.outer(v_ucb, self.theta))

    def _observe(self, placement: Placement, outcome: ChoiceOutcome) -> None:
        update_stats(self.stats, placement, outcome)


class GP2UCB(Policy):
    """一般模型的逐对UCB策略"""

    kind = PolicyKind.GP2

    def __init__(self, revenues, n_positions: int, horizon: int, optimizer: Optional[OptimizerConfig] = None):
        super().__init__(revenues, n_positions, horizon, optimizer)
        self.params = confidence_params(self.horizon, self.N, self.K, kind=ModelKind.GENERAL)
        self.stats = PairwiseStats(self.N, self.K)

    def _select(self, t: int) -> Placement:
        v_ucb = ucb_general_matrix(self.stats.n, self.stats.w, self.params.L)
        self.last_ucb = v_ucb
        return self._optimize(v_ucb)

    def _observe(self, placement: Placement, outcome: ChoiceOutcome) -> None:
        update_stats(self.stats, placement, outcome)


def exploration_rounds(horizon: int, explore_c: float = 0.1) -> int:
    """J0(T) = ⌈c √T⌉"""
    return max(1, math.ceil(explore_c * math.sqrt(horizon)))


def estimate_theta(stats: PairwiseStats, theta_floor: float = 0.01) -> ThetaEstimate:
    """从探索阶段的成对计数估计位置效应

    每个对的胜率截断到 [0, 1/2] 后转成赔率 p/(1-p)，按位置对有数据的商品取平均，
    再以最大值归一化；没有数据的位置取 1，为 0 的估计抬到 theta_floor。
    """
    n = stats.n.astype(float)
    w = stats.w.astype(float)
    observed = n > 0
    p_hat = np.clip(np.divide(w, n, out=np.zeros_like(w), where=observed), 0.0, 0.5)
    odds = np.minimum(p_hat / (1.0 - p_hat), 1.0)

    counts = observed.sum(axis=0)
    has_data = counts > 0
    theta = np.ones(stats.shape[1])
    if not has_data.any():
        logger.warning("No exploration data for any position; theta estimate falls back to all ones")
        return ThetaEstimate(theta, degenerate=True)

    means = np.where(observed, odds, 0.0).sum(axis=0)[has_data] / counts[has_data]
    if means.max() <= 0:
        logger.warning("Every explored pair had zero wins; theta estimate falls back to all ones")
        return ThetaEstimate(theta, degenerate=True)

    theta[has_data] = means / means.max()
    return ThetaEstimate(np.maximum(theta, theta_floor), degenerate=False)


class EP2MLEUCB(Policy):
    """θ 未知：探索阶段估计 θ̂，随后以 θ̂ 运行 P2MLE-UCB（统计量在阶段边界清零）"""

    kind = PolicyKind.EP2MLE

    def __init__(self, revenues, n_positions: int, horizon: int, rng=None, explore_c: Optional[float] = None,
                 estimation: Optional[EstimationConfig] = None, optimizer: Optional[OptimizerConfig] = None):
        super().__init__(revenues, n_positions, horizon, optimizer)
        self.estimation = estimation or EstimationConfig()
        self.explore_c = self.estimation.explore_c if explore_c is None else explore_c
        if self.explore_c <= 0:
            raise ValidationError(f"explore_c must be positive, got {self.explore_c}", field="explore_c")
        self.rng = as_generator(rng)
        self.exploration_rounds = exploration_rounds(self.horizon, self.explore_c)
        self.explore_stats = PairwiseStats(self.N, self.K)
        self.theta_estimate: Optional[ThetaEstimate] = None
        self._inner: Optional[P2MLEUCB] = None

    @property
    def phase(self) -> PolicyPhase:
        if self.rounds_played < self.exploration_rounds:
            return PolicyPhase.EXPLORATION
        return PolicyPhase.EXPLOITATION

    @property
    def inner(self) -> Optional[P2MLEUCB]:
        return self._inner

    def _ensure_inner(self) -> P2MLEUCB:
        if self._inner is None:
            self.theta_estimate = estimate_theta(self.explore_stats, self.estimation.theta_floor)
            logger.info(f"Exploration finished after {self.rounds_played} rounds; "
                        f"theta_hat={np.round(self.theta_estimate.theta, 4).tolist()}")
            self._inner = P2MLEUCB(self.revenues, self.theta_estimate.theta, self.horizon,
                                   estimation=self.estimation, optimizer=self.optimizer)
        return self._inner

    def _select(self, t: int) -> Placement:
        if self.phase == PolicyPhase.EXPLORATION:
            products = self.rng.choice(self.N, size=self.K, replace=False)
            return Placement(tuple((int(i), k) for k, i in enumerate(products)))
        inner = self._ensure_inner()
        placement = inner._select(t)
        self.last_ucb = inner.last_ucb
        return placement

    def _observe(self, placement: Placement, outcome: ChoiceOutcome) -> None:
        if self.phase == PolicyPhase.EXPLORATION:
            update_stats(self.explore_stats, placement, outcome)
        else:
            self._ensure_inner()._observe(placement, outcome)


class EpochUCB(Policy):
    """基于 epoch 的 MNL-UCB 基线

    虚拟商品：一般模型下是 (商品, 位置) 对；θ 已知时是商品本身，选择次数除以所在位置的 θ。
    ṽ = 总选择次数 / 展示过的 epoch 数，
    UCB = ṽ + sqrt(ṽ · 48 log(√(NK)·ℓ + 1) / T_item) + 48 log(√(NK)·ℓ + 1) / T_item，截断到 [0, 1]。
    """

    def __init__(self, revenues, n_positions: int, horizon: int, theta=None,
                 optimizer: Optional[OptimizerConfig] = None):
        super().__init__(revenues, n_positions, horizon, optimizer)
        if theta is None:
            self.kind = PolicyKind.EPOCH_UCB_GEN
            self.theta: Optional[np.ndarray] = None
            shape = (self.N, self.K)
        else:
            self.kind = PolicyKind.EPOCH_UCB_V
            self.theta = _validate_theta(theta, self.K)
            shape = (self.N,)
        self.epochs_offered = np.zeros(shape, dtype=np.int64)
        self.picks = np.zeros(shape)
        self.epoch_index = 0
        self._epoch_picks = np.zeros(shape)
        self._current: Optional[Placement] = None

    @property
    def in_epoch(self) -> bool:
        return self._current is not None

    def _item(self, product: int, position: int):
        return product if self.theta is not None else (product, position)

    def virtual_estimates(self) -> np.ndarray:
        """ṽ（截断前）；从未展示的虚拟商品为 NaN"""
        return np.divide(self.picks, self.epochs_offered, out=np.full(self.picks.shape, np.nan),
                         where=self.epochs_offered > 0)

    def ucb(self) -> np.ndarray:
        log_term = math.log(math.sqrt(self.N * self.K) * max(self.epoch_index, 1) + 1.0)
        ucb = np.ones(self.picks.shape)
        seen = self.epochs_offered > 0
        offered = self.epochs_offered[seen].astype(float)
        v_tilde = self.picks[seen] / offered
        ucb[seen] = (v_tilde + np.sqrt(v_tilde * EPOCH_CONFIDENCE_SCALE * log_term / offered)
                     + EPOCH_CONFIDENCE_SCALE * log_term / offered)
        return np.clip(ucb, 0.0, 1.0)

    def _select(self, t: int) -> Placement:
        if self._current is None:
            self.epoch_index += 1
            ucb = self.ucb()
            self.last_ucb = ucb
            V = np.outer(ucb, self.theta) if self.theta is not None else ucb
            self._current = self._optimize(V)
        return self._current

    def _observe(self, placement: Placement, outcome: ChoiceOutcome) -> None:
        if not outcome.is_outside:
            k = placement.position_of(outcome.chosen)
            weight = 1.0 / self.theta[k] if self.theta is not None else 1.0
            self._epoch_picks[self._item(outcome.chosen, k)] += weight
            return

        for i, k in placement.pairs:
            self.epochs_offered[self._item(i, k)] += 1
        self.picks += self._epoch_picks
        self._epoch_picks[...] = 0.0
        self._current = None


def build_policy(kind, instance: Instance, horizon: int, rng=None, *, explore_c: Optional[float] = None,
                 estimation: Optional[EstimationConfig] = None,
                 optimizer: Optional[OptimizerConfig] = None) -> Policy:
    """按标识构造策略，只向策略暴露实例的公开信息"""
    try:
        kind = PolicyKind(kind) if not isinstance(kind, PolicyKind) else kind
    except ValueError as e:
        choices = ", ".join(k.value for k in PolicyKind)
        raise ValidationError(f"Unknown policy {kind!r}; expected one of: {choices}", field="policy",
                              value=kind) from e

    if kind.requires_multiplicative and not instance.is_multiplicative:
        raise ValidationError(f"Policy {kind.value} requires a multiplicative instance; {instance.name} is general",
                              field="policy", value=kind.value)

    if kind == PolicyKind.P2MLE:
        return P2MLEUCB(instance.revenues, instance.model.theta, horizon, estimation, optimizer)
    if kind == PolicyKind.GP2:
        return GP2UCB(instance.revenues, instance.K, horizon, optimizer)
    if kind == PolicyKind.EP2MLE:
        return EP2MLEUCB(instance.revenues, instance.K, horizon, rng, explore_c, estimation, optimizer)
    if kind == PolicyKind.EPOCH_UCB_V:
        return EpochUCB(instance.revenues, instance.K, horizon, theta=instance.model.theta, optimizer=optimizer)
    return EpochUCB(instance.revenues, instance.K, horizon, optimizer=optimizer)
