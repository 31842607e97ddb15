"""位置感知MNL选择模型 - Choice Model

本模块是系统的数据与概率核心：编码问题实例、放置方案（商品子集 + 展示位置的单射），
并给出MNL购买概率、期望收益与顾客选择采样。

核心职责：
1. 实例定义：乘法模型（v_i * θ_k）与一般模型（独立的 v_{i,k} 矩阵）
2. 放置方案：构造时校验商品、位置两两不同
3. 选择概率：P(i) = α_{i,σ(i)} / (1 + Σ α)，外部选项 P(0) = 1 / (1 + Σ α)
4. 期望收益：R(S, σ) = Σ r_i P(i)
5. 选择采样：每次调用恰好消耗一个均匀随机数，相同种子得到相同轨迹

索引约定：
- 库内部的商品、位置索引均从 0 开始
- 外部格式（实例文件、CLI 输出）从 1 开始，外部选项记为 0
- 内部的外部选项使用哨兵 OUTSIDE_OPTION = -1，永远不会与商品索引冲突

使用示例：
    instance = Instance.multiplicative("ex1", revenues=[0.8, 0.75, 0.5],
                                       v=[0.25, 0.4, 0.8], theta=[1.0, 0.5])
    placement = Placement.from_pairs([(1, 1), (3, 2)])
    revenue = expected_revenue(instance, placement)   # 8/33
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.exceptions import ValidationError

OUTSIDE_OPTION = -1
NORMALIZATION_TOLERANCE = 1e-12


class ModelKind(Enum):
    """吸引力模型类型"""
    MULTIPLICATIVE = "multiplicative"
    GENERAL = "general"


def _frozen_array(values: Any, name: str, ndim: int) -> np.ndarray:
    try:
        array = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be numeric", field=name, value=values) from e
    if array.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {array.shape}", field=name)
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite entries", field=name)
    array.setflags(write=False)
    return array


def _check_attractions(array: np.ndarray, name: str) -> None:
    if array.size and (array.min() <= 0.0 or array.max() > 1.0):
        raise ValidationError(f"all entries of {name} must lie in (0, 1]", field=name)


@dataclass(frozen=True, eq=False)
class MultiplicativeModel:
    """乘法模型：α_{i,k} = v_i θ_k"""
    v: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen_array(self.v, "model.v", 1))
        object.__setattr__(self, "theta", _frozen_array(self.theta, "model.theta", 1))
        _check_attractions(self.v, "model.v")
        _check_attractions(self.theta, "model.theta")
        if self.theta.size and abs(self.theta.max() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValidationError("model.theta must be normalized so that max(theta) = 1",
                                  field="model.theta", value=float(self.theta.max()))

    @property
    def kind(self) -> ModelKind:
        return ModelKind.MULTIPLICATIVE

    def matrix(self) -> np.ndarray:
        return np.outer(self.v, self.theta)


@dataclass(frozen=True, eq=False)
class GeneralModel:
    """一般模型：每个商品-位置对独立的吸引力 V[i][k]"""
    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "V", _frozen_array(self.V, "model.V", 2))
        _check_attractions(self.V, "model.V")

    @property
    def kind(self) -> ModelKind:
        return ModelKind.GENERAL

    def matrix(self) -> np.ndarray:
        return np.array(self.V)


AttractionModel = Union[MultiplicativeModel, GeneralModel]


@dataclass(frozen=True, eq=False)
class Instance:
    """问题实例：商品数 N、位置数 K、收益向量与吸引力模型"""
    name: str
    revenues: np.ndarray
    model: AttractionModel
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        revenues = _frozen_array(self.revenues, "revenues", 1)
        object.__setattr__(self, "revenues", revenues)
        if revenues.size < 1:
            raise ValidationError("an instance needs at least one product", field="N", value=0)
        if revenues.min() < 0.0 or revenues.max() > 1.0:
            raise ValidationError("all revenues must lie in [0, 1]", field="revenues")

        if isinstance(self.model, MultiplicativeModel):
            if self.model.v.size != revenues.size:
                raise ValidationError(f"model.v has length {self.model.v.size}, expected N={revenues.size}",
                                      field="model.v")
            n_positions = self.model.theta.size
        elif isinstance(self.model, GeneralModel):
            if self.model.V.shape[0] != revenues.size:
                raise ValidationError(f"model.V has {self.model.V.shape[0]} rows, expected N={revenues.size}",
                                      field="model.V")
            n_positions = self.model.V.shape[1]
        else:
            raise ValidationError(f"unsupported attraction model: {type(self.model).__name__}", field="model")

        if not (1 <= n_positions <= revenues.size):
            raise ValidationError(f"K must satisfy 1 <= K <= N, got K={n_positions}, N={revenues.size}", field="K")

        matrix = self.model.matrix()
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    # ---------- 构造 ----------

    @classmethod
    def multiplicative(cls, name: str, revenues: Sequence[float], v: Sequence[float],
                       theta: Sequence[float], metadata: Optional[Dict[str, Any]] = None) -> "Instance":
        return cls(name, np.asarray(revenues, dtype=float), MultiplicativeModel(v, theta), dict(metadata or {}))

    @classmethod
    def general(cls, name: str, revenues: Sequence[float], V: Any,
                metadata: Optional[Dict[str, Any]] = None) -> "Instance":
        return cls(name, np.asarray(revenues, dtype=float), GeneralModel(V), dict(metadata or {}))

    # ---------- 访问器 ----------

    @property
    def N(self) -> int:
        return int(self.revenues.size)

    @property
    def K(self) -> int:
        return int(self._matrix.shape[1])  # type: ignore[attr-defined]

    @property
    def kind(self) -> ModelKind:
        return self.model.kind

    @property
    def is_multiplicative(self) -> bool:
        return self.kind == ModelKind.MULTIPLICATIVE

    @property
    def theta_min(self) -> float:
        """min_k θ_k，仅乘法模型有定义"""
        if not isinstance(self.model, MultiplicativeModel):
            raise ValidationError("theta_min is only defined for multiplicative instances", field="model.type")
        return float(self.model.theta.min())

    def attraction_matrix(self) -> np.ndarray:
        """N x K 吸引力矩阵（只读）"""
        return self._matrix  # type: ignore[attr-defined]

    def to_general(self) -> "Instance":
        """嵌入到一般模型：V[i][k] = v_i θ_k"""
        return Instance.general(self.name, self.revenues, self.attraction_matrix(), self.metadata)


@dataclass(frozen=True)
class Placement:
    """放置方案 (S, σ)：按商品索引排序的 (商品, 位置) 对，0 起始"""
    pairs: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        try:
            normalized = tuple(sorted((int(i), int(k)) for i, k in self.pairs))
        except (TypeError, ValueError) as e:
            raise ValidationError("placement pairs must be (product, position) integer pairs",
                                  field="placement", value=self.pairs) from e
        products = [i for i, _ in normalized]
        positions = [k for _, k in normalized]
        if any(i < 0 for i in products) or any(k < 0 for k in positions):
            raise ValidationError("placement indices must be non-negative", field="placement", value=normalized)
        if len(set(products)) != len(products):
            raise ValidationError("placement assigns a product more than once", field="placement", value=normalized)
        if len(set(positions)) != len(positions):
            raise ValidationError("placement fills a position more than once", field="placement", value=normalized)
        object.__setattr__(self, "pairs", normalized)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]], one_based: bool = True) -> "Placement":
        """从外部 (1 起始) 或内部 (0 起始) 的对列表构造"""
        offset = 1 if one_based else 0
        return cls(tuple((int(i) - offset, int(k) - offset) for i, k in pairs))

    @classmethod
    def empty(cls) -> "Placement":
        return cls(())

    def to_pairs(self, one_based: bool = True) -> List[List[int]]:
        offset = 1 if one_based else 0
        return [[i + offset, k + offset] for i, k in self.pairs]

    @property
    def products(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.pairs)

    @property
    def positions(self) -> Tuple[int, ...]:
        return tuple(k for _, k in self.pairs)

    @property
    def key(self) -> Tuple[Tuple[int, int], ...]:
        return self.pairs

    def position_of(self, product: int) -> Optional[int]:
        for i, k in self.pairs:
            if i == product:
                return k
        return None

    def __len__(self) -> int:
        return len(self.pairs)

    def validate_for(self, n_products: int, n_positions: int) -> "Placement":
        """校验放置方案在给定实例规模下可行"""
        if len(self.pairs) > n_positions:
            raise ValidationError(f"placement shows {len(self.pairs)} products but only {n_positions} positions exist",
                                  field="placement")
        for i, k in self.pairs:
            if i >= n_products:
                raise ValidationError(f"product index {i} out of range for N={n_products}", field="placement", value=i)
            if k >= n_positions:
                raise ValidationError(f"position index {k} out of range for K={n_positions}", field="placement", value=k)
        return self


@dataclass(frozen=True)
class ChoiceOutcome:
    """顾客的一次选择：外部选项或放置方案中的某个商品"""
    chosen: int = OUTSIDE_OPTION

    @property
    def is_outside(self) -> bool:
        return self.chosen == OUTSIDE_OPTION

    def to_external(self) -> int:
        """外部编码：外部选项为 0，商品从 1 开始"""
        return 0 if self.is_outside else self.chosen + 1


OUTSIDE = ChoiceOutcome(OUTSIDE_OPTION)


def attraction(instance: Instance, i: int, k: int) -> float:
    """商品 i 放在位置 k 时的吸引力"""
    if not (0 <= i < instance.N):
        raise ValidationError(f"product index {i} out of range for N={instance.N}", field="i", value=i)
    if not (0 <= k < instance.K):
        raise ValidationError(f"position index {k} out of range for K={instance.K}", field="k", value=k)
    return float(instance.attraction_matrix()[i, k])


def _placement_attractions(instance: Instance, placement: Placement) -> np.ndarray:
    placement.validate_for(instance.N, instance.K)
    if not placement.pairs:
        return np.zeros(0)
    products, positions = zip(*placement.pairs)
    return instance.attraction_matrix()[list(products), list(positions)]


def choice_distribution(instance: Instance, placement: Placement) -> np.ndarray:
    """MNL选择概率

    Returns:
        长度 1 + |S| 的向量：下标 0 为外部选项，之后按 placement.pairs 的顺序对应各商品
    """
    alphas = _placement_attractions(instance, placement)
    denominator = 1.0 + alphas.sum()
    return np.concatenate(([1.0], alphas)) / denominator


def expected_revenue(instance: Instance, placement: Placement) -> float:
    """期望收益 Σ_{i∈S} r_i P(i | S, σ)"""
    alphas = _placement_attractions(instance, placement)
    if alphas.size == 0:
        return 0.0
    revenues = instance.revenues[list(placement.products)]
    return float(np.dot(revenues, alphas) / (1.0 + alphas.sum()))


def sample_choice(instance: Instance, placement: Placement, rng: np.random.Generator) -> ChoiceOutcome:
    """按MNL概率抽取一次顾客选择，恰好消耗一个均匀随机数"""
    probabilities = choice_distribution(instance, placement)
    u = rng.random()
    index = int(np.searchsorted(np.cumsum(probabilities), u, side="right"))
    index = min(index, probabilities.size - 1)
    if index == 0:
        return OUTSIDE
    return ChoiceOutcome(placement.pairs[index - 1][0])
