"""Pytest 配置和共享夹具"""
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

os.environ.setdefault("POSMNL_ENV", "testing")

from src.core.choice_model import Instance, Placement  # noqa: E402
from src.modules.instances import example_instance  # noqa: E402


# 12 行点击日志：10 行随机展示 + 2 行非随机展示
# 随机子集：位置 1 点击率 2/5，位置 2 点击率 1/5 -> θ = (1, 0.5)
# 商品点击率 A=0.5, B=0.25, C=0 -> v = (1, 0.5, 0.01)
# 商品平均价格 A=100, B=200, C=500
CLICK_LOG_ROWS = [
    ("srch_id", "prop_id", "position", "click_bool", "random_bool", "price_usd"),
    (1, "A", 1, 1, 1, 100.0),
    (1, "B", 2, 0, 1, 200.0),
    (2, "A", 1, 0, 1, 100.0),
    (2, "C", 2, 0, 1, 500.0),
    (3, "B", 1, 1, 1, 200.0),
    (3, "A", 2, 1, 1, 100.0),
    (4, "C", 1, 0, 1, 500.0),
    (4, "A", 2, 0, 1, 100.0),
    (5, "B", 1, 0, 1, 200.0),
    (5, "B", 2, 0, 1, 200.0),
    (6, "D", 1, 1, 0, 50.0),
    (6, "A", 2, 1, 0, 1000.0),
]


@pytest.fixture
def temp_dir():
    """创建临时目录"""
    temp_path = tempfile.mkdtemp()
    yield Path(temp_path)
    shutil.rmtree(temp_path)


@pytest.fixture
def ex1() -> Instance:
    """算例 1（乘法模型，N=3, K=2）"""
    return example_instance(1)


@pytest.fixture
def ex4() -> Instance:
    """算例 4（一般模型，N=5, K=3）"""
    return example_instance(4)


@pytest.fixture
def unit_instance() -> Instance:
    """N = K = 1, r = 1, v = 1"""
    return Instance.multiplicative("unit", revenues=[1.0], v=[1.0], theta=[1.0])


@pytest.fixture
def ex1_placement() -> Placement:
    """算例 1 上的放置方案 {(1,1), (3,2)}"""
    return Placement.from_pairs([(1, 1), (3, 2)])


@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(12345)


def write_click_log(path: Path, rows=CLICK_LOG_ROWS) -> Path:
    lines = [",".join(str(value) for value in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def click_log(temp_dir) -> Path:
    """12 行点击日志 CSV"""
    return write_click_log(temp_dir / "train.csv")
