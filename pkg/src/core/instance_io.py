"""实例文件读写

JSON 格式：
    {
      "name": "ex4", "N": 5, "K": 3,
      "revenues": [...],
      "model": {"type": "multiplicative", "v": [...], "theta": [...]}
             | {"type": "general", "V": [[...], ...]},
      "metadata": {...}          # 可选
    }
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

from ..utils.exceptions import StorageError, ValidationError
from ..utils.logger import get_logger
from .choice_model import GeneralModel, Instance, ModelKind, MultiplicativeModel

logger = get_logger(__name__)


def instance_to_dict(instance: Instance) -> Dict[str, Any]:
    """转换为实例文件格式"""
    if isinstance(instance.model, MultiplicativeModel):
        model: Dict[str, Any] = {
            "type": ModelKind.MULTIPLICATIVE.value,
            "v": instance.model.v.tolist(),
            "theta": instance.model.theta.tolist(),
        }
    else:
        model = {"type": ModelKind.GENERAL.value, "V": instance.model.V.tolist()}

    data: Dict[str, Any] = {
        "name": instance.name,
        "N": instance.N,
        "K": instance.K,
        "revenues": instance.revenues.tolist(),
        "model": model,
    }
    if instance.metadata:
        data["metadata"] = instance.metadata
    return data


def _require(data: Dict[str, Any], key: str, where: str = "") -> Any:
    if key not in data:
        raise ValidationError(f"Missing required field: {where}{key}", field=f"{where}{key}")
    return data[key]


def instance_from_dict(data: Dict[str, Any]) -> Instance:
    """从字典构造实例，违反不变量时给出字段级错误"""
    if not isinstance(data, dict):
        raise ValidationError("instance document must be a JSON object", field="<root>")

    name = str(_require(data, "name"))
    n_products = _require(data, "N")
    n_positions = _require(data, "K")
    revenues = _require(data, "revenues")
    model_data = _require(data, "model")
    if not isinstance(model_data, dict):
        raise ValidationError("model must be an object", field="model")

    if not isinstance(n_products, int) or n_products < 1:
        raise ValidationError(f"N must be a positive integer, got {n_products!r}", field="N", value=n_products)
    if not isinstance(n_positions, int) or not (1 <= n_positions <= n_products):
        raise ValidationError(f"K must be an integer in [1, N], got {n_positions!r}", field="K", value=n_positions)
    if not isinstance(revenues, list) or len(revenues) != n_products:
        raise ValidationError(f"revenues must be an array of length N={n_products}", field="revenues")

    model_type = _require(model_data, "type", "model.")
    if model_type == ModelKind.MULTIPLICATIVE.value:
        v = _require(model_data, "v", "model.")
        theta = _require(model_data, "theta", "model.")
        if not isinstance(v, list) or len(v) != n_products:
            raise ValidationError(f"model.v must be an array of length N={n_products}", field="model.v")
        if not isinstance(theta, list) or len(theta) != n_positions:
            raise ValidationError(f"model.theta must be an array of length K={n_positions}", field="model.theta")
        model: Any = MultiplicativeModel(v, theta)
    elif model_type == ModelKind.GENERAL.value:
        V = _require(model_data, "V", "model.")
        if not isinstance(V, list) or len(V) != n_products:
            raise ValidationError(f"model.V must have N={n_products} rows", field="model.V")
        for row_index, row in enumerate(V):
            if not isinstance(row, list) or len(row) != n_positions:
                raise ValidationError(f"model.V[{row_index}] must have K={n_positions} entries",
                                      field=f"model.V[{row_index}]")
        model = GeneralModel(V)
    else:
        raise ValidationError(f"model.type must be 'multiplicative' or 'general', got {model_type!r}",
                              field="model.type", value=model_type)

    metadata = data.get("metadata") or {}
    return Instance(name, revenues, model, dict(metadata))


def load_instance(path: Union[str, Path]) -> Instance:
    """读取实例文件"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot read instance file {path}: {e}", operation="read", path=str(path)) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}",
                              field="<json>", line=e.lineno, column=e.colno) from e
    instance = instance_from_dict(data)
    logger.debug(f"Loaded instance {instance.name} (N={instance.N}, K={instance.K}) from {path}")
    return instance


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def dump_instance(instance: Instance, path: Union[str, Path]) -> Path:
    """写出实例文件"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_instance(instance), encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write instance file {path}: {e}", operation="write", path=str(path)) from e
    return path
