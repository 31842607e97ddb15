"""点击日志参数抽取模块 - Expedia Ingestion

从随机展示的酒店搜索日志中抽取位置效应 θ、商品吸引力 v 与收益 r，再构造模拟实例。

流程：
1. load_impressions: 分块读取 CSV，校验必需列，跳过并统计格式错误的行
2. extract_parameters: 只用 random_bool = 1 的行（展示顺序与商品无关）
   - θ_k = 位置 k 的平均点击率 / 位置 1 的平均点击率，观测数不足的位置先剔除
   - v_i = 商品平均点击率 / 最大商品平均点击率，下限 v_floor
   - r_i = min(平均价格, cap) / cap，cap 为商品平均价格的分位数
3. build_instance: 在 v >= min_v 的商品中按种子抽取 N 个，截取前 K 个位置

点击率按曝光加权（每行计一次），不重建搜索会话。
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Union

import numpy as np
import pandas as pd

from config.settings import IngestConfig

from ..core.choice_model import Instance
from ..utils.exceptions import DataIngestError, SchemaError, StorageError, ValidationError
from ..utils.logger import get_logger

logger = get_logger(__name__)

CHUNK_SIZE = 500_000
CANONICAL_COLUMNS = ("prop_id", "position", "click", "randomized", "price")


@dataclass(frozen=True)
class ImpressionRecord:
    """一次展示"""
    prop_id: str
    position: int
    click: int
    randomized: int
    price: float


@dataclass
class ImpressionLog:
    """解析后的展示日志（规范列名的 DataFrame）"""
    frame: pd.DataFrame
    rows_read: int = 0
    rows_skipped: int = 0
    source: Optional[str] = None

    def __len__(self) -> int:
        return len(self.frame)

    def records(self) -> Iterator[ImpressionRecord]:
        for row in self.frame.itertuples(index=False):
            yield ImpressionRecord(str(row.prop_id), int(row.position), int(row.click), int(row.randomized),
                                   float(row.price))

    def summary(self) -> Dict[str, Any]:
        return {"source": self.source, "rows_read": self.rows_read, "rows_kept": len(self),
                "rows_skipped": self.rows_skipped}


@dataclass
class ExtractedParams:
    """抽取结果：θ 按保留位置排列且 θ[0] = 1"""
    theta: np.ndarray
    positions: List[int]
    item_v: Dict[str, float]
    item_r: Dict[str, float]
    position_counts: Dict[int, int] = field(default_factory=dict)
    item_counts: Dict[str, int] = field(default_factory=dict)
    price_cap: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": [float(t) for t in self.theta],
            "positions": [int(k) for k in self.positions],
            "item_v": self.item_v,
            "item_r": self.item_r,
            "position_counts": {str(k): int(n) for k, n in self.position_counts.items()},
            "item_counts": self.item_counts,
            "price_cap": float(self.price_cap),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExtractedParams":
        try:
            return cls(
                theta=np.asarray(data["theta"], dtype=float),
                positions=[int(k) for k in data["positions"]],
                item_v={str(k): float(v) for k, v in data["item_v"].items()},
                item_r={str(k): float(r) for k, r in data["item_r"].items()},
                position_counts={int(k): int(n) for k, n in data.get("position_counts", {}).items()},
                item_counts={str(k): int(n) for k, n in data.get("item_counts", {}).items()},
                price_cap=float(data.get("price_cap", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed parameters document: {e}", field="params") from e

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise StorageError(f"Cannot write parameters file {path}: {e}", operation="write", path=str(path)) from e
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExtractedParams":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise StorageError(f"Cannot read parameters file {path}: {e}", operation="read", path=str(path)) from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}",
                                  field="<json>") from e
        return cls.from_dict(data)


def _column_map(columns: IngestConfig) -> Dict[str, str]:
    return {
        columns.prop_id_column: "prop_id",
        columns.position_column: "position",
        columns.click_column: "click",
        columns.random_column: "randomized",
        columns.price_column: "price",
    }


def _clean_chunk(chunk: pd.DataFrame) -> pd.DataFrame:
    prop_id = chunk["prop_id"].astype(str).str.strip()
    position = pd.to_numeric(chunk["position"], errors="coerce")
    click = pd.to_numeric(chunk["click"], errors="coerce")
    randomized = pd.to_numeric(chunk["randomized"], errors="coerce")
    price = pd.to_numeric(chunk["price"], errors="coerce")

    valid = (
        (prop_id != "")
        & position.notna() & (position >= 1) & (position == position.round())
        & click.isin([0, 1]) & randomized.isin([0, 1])
        & price.notna() & np.isfinite(price) & (price >= 0)
    )
    return pd.DataFrame({
        "prop_id": prop_id[valid].astype(str),
        "position": position[valid].astype(np.int64),
        "click": click[valid].astype(np.int64),
        "randomized": randomized[valid].astype(np.int64),
        "price": price[valid].astype(float),
    })


def load_impressions(path: Union[str, Path], columns: Optional[IngestConfig] = None,
                     chunk_size: int = CHUNK_SIZE) -> ImpressionLog:
    """读取点击日志

    Raises:
        StorageError: 文件不可读
        SchemaError: 缺少必需列
    """
    path = Path(path)
    columns = columns or IngestConfig()
    mapping = _column_map(columns)

    try:
        header = pd.read_csv(path, nrows=0)
    except (OSError, pd.errors.EmptyDataError) as e:
        raise StorageError(f"Cannot read click log {path}: {e}", operation="read", path=str(path)) from e
    for source_name in mapping:
        if source_name not in header.columns:
            raise SchemaError(f"Click log {path} is missing required column '{source_name}'", column=source_name)

    chunks = []
    rows_read = 0
    try:
        reader = pd.read_csv(path, usecols=list(mapping), dtype=str, chunksize=chunk_size, keep_default_na=False)
        for chunk in reader:
            rows_read += len(chunk)
            chunks.append(_clean_chunk(chunk.rename(columns=mapping)))
    except (OSError, pd.errors.ParserError) as e:
        raise StorageError(f"Failed while parsing click log {path}: {e}", operation="read", path=str(path)) from e

    frame = pd.concat(chunks, ignore_index=True) if chunks else pd.DataFrame(columns=list(CANONICAL_COLUMNS))
    log = ImpressionLog(frame=frame, rows_read=rows_read, rows_skipped=rows_read - len(frame), source=str(path))
    if log.rows_skipped:
        logger.warning(f"Skipped {log.rows_skipped} malformed rows out of {rows_read} in {path}")
    logger.info(f"Loaded {len(log)} impressions from {path}")
    return log


def _as_frame(records: Union[ImpressionLog, pd.DataFrame, Iterable[ImpressionRecord]]) -> pd.DataFrame:
    if isinstance(records, ImpressionLog):
        return records.frame
    if isinstance(records, pd.DataFrame):
        missing = [c for c in CANONICAL_COLUMNS if c not in records.columns]
        if missing:
            raise SchemaError(f"Impression frame is missing column '{missing[0]}'", column=missing[0])
        return records
    rows = [(r.prop_id, r.position, r.click, r.randomized, r.price) for r in records]
    return pd.DataFrame(rows, columns=list(CANONICAL_COLUMNS))


def extract_parameters(records, min_position_obs: int = 1000, min_item_obs: int = 1, price_quantile: float = 0.95,
                       v_floor: float = 0.01, k_limit: Optional[int] = None,
                       theta_floor: float = 0.01) -> ExtractedParams:
    """从随机展示子集抽取 (θ, v, r)

    Raises:
        DataIngestError: 没有随机展示记录、位置 1 缺失或点击率全为 0
    """
    if not (0 < price_quantile <= 1):
        raise ValidationError(f"price_quantile must lie in (0, 1], got {price_quantile}", field="price_quantile")

    frame = _as_frame(records)
    subset = frame[frame["randomized"] == 1]
    if subset.empty:
        raise DataIngestError("No randomized impressions (random_bool = 1) in the click log", stage="filter")
    # 排序后聚合，结果与输入行序无关
    subset = subset.sort_values(list(CANONICAL_COLUMNS), kind="mergesort")

    by_position = subset.groupby("position")["click"].agg(["mean", "count"])
    by_position = by_position[by_position["count"] >= min_position_obs]
    if 1 not in by_position.index:
        raise DataIngestError(f"Position 1 has fewer than {min_position_obs} randomized impressions; "
                              "position effects cannot be normalized", stage="normalize")
    anchor = float(by_position.loc[1, "mean"])
    if anchor <= 0:
        raise DataIngestError("Position 1 has a zero click-through rate; position effects cannot be normalized",
                              stage="normalize")
    if k_limit is not None:
        by_position = by_position.iloc[:k_limit]

    theta = by_position["mean"].to_numpy(dtype=float) / anchor
    if theta.max() > 1.0:
        clipped = [int(k) for k, t in zip(by_position.index, theta) if t > 1.0]
        logger.warning(f"Position effects above position 1 clipped to 1 at positions {clipped}")
    theta = np.clip(theta, theta_floor, 1.0)

    by_item = subset.groupby("prop_id").agg(ctr=("click", "mean"), count=("click", "size"), price=("price", "mean"))
    by_item = by_item[by_item["count"] >= min_item_obs]
    if by_item.empty:
        raise DataIngestError(f"No item has at least {min_item_obs} randomized impressions", stage="items")
    top_ctr = float(by_item["ctr"].max())
    if top_ctr <= 0:
        raise DataIngestError("No item was ever clicked in the randomized subset", stage="items")
    v = np.maximum(by_item["ctr"].to_numpy(dtype=float) / top_ctr, v_floor)

    price_cap = float(by_item["price"].quantile(price_quantile))
    if price_cap <= 0:
        raise DataIngestError(f"Price cap (quantile {price_quantile}) is not positive", stage="prices")
    r = np.minimum(by_item["price"].to_numpy(dtype=float), price_cap) / price_cap

    item_ids = [str(i) for i in by_item.index]
    params = ExtractedParams(
        theta=theta,
        positions=[int(k) for k in by_position.index],
        item_v={i: float(x) for i, x in zip(item_ids, v)},
        item_r={i: float(x) for i, x in zip(item_ids, r)},
        position_counts={int(k): int(n) for k, n in by_position["count"].items()},
        item_counts={i: int(n) for i, n in zip(item_ids, by_item["count"])},
        price_cap=price_cap,
    )
    logger.info(f"Extracted {len(params.positions)} positions and {len(item_ids)} items "
                f"from {len(subset)} randomized impressions (price cap {price_cap:.2f})")
    return params


def build_instance(params: ExtractedParams, n_products: int, n_positions: int, min_v: float = 0.1,
                   seed: int = 0) -> Instance:
    """按种子从 v >= min_v 的商品中抽取 N 个构造乘法模型实例"""
    if n_positions < 1 or n_positions > len(params.theta):
        raise ValidationError(f"K={n_positions} exceeds the {len(params.theta)} retained positions",
                              field="K", value=n_positions)
    if n_positions > n_products:
        raise ValidationError(f"K must not exceed N, got K={n_positions}, N={n_products}", field="K")

    qualifying = sorted(i for i, v in params.item_v.items() if v >= min_v)
    if len(qualifying) < n_products:
        raise ValidationError(f"Only {len(qualifying)} items have v >= {min_v}, need N={n_products}",
                              field="N", value=n_products)

    order = np.random.default_rng(seed).permutation(len(qualifying))
    chosen = sorted(qualifying[j] for j in order[:n_products])
    return Instance.multiplicative(
        f"expedia-N{n_products}-K{n_positions}-s{seed}",
        revenues=[params.item_r[i] for i in chosen],
        v=[params.item_v[i] for i in chosen],
        theta=params.theta[:n_positions],
        metadata={"prop_ids": chosen, "seed": int(seed), "price_cap": params.price_cap},
    )
