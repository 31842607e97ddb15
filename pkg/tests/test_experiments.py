"""对比实验套件测试"""
import csv

import numpy as np
import pytest

from src.modules.expedia_ingest import ExtractedParams
from src.modules.experiments import SUITES, SUMMARY_HEADER, run_suite
from src.utils.exceptions import ValidationError


@pytest.fixture
def calibrated_params_path(temp_dir):
    items = [f"h{i:03d}" for i in range(80)]
    params = ExtractedParams(
        theta=np.linspace(1.0, 0.3, 20),
        positions=list(range(1, 21)),
        item_v={item: 0.15 + 0.01 * j for j, item in enumerate(items)},
        item_r={item: 0.3 + 0.005 * j for j, item in enumerate(items)},
        price_cap=250.0,
    )
    return params.save(temp_dir / "params.json")


class TestSuites:
    """套件定义测试类"""

    def test_registry(self):
        """测试预定义套件"""
        assert set(SUITES) == {"known-theta", "unknown-theta", "general", "expedia-known", "expedia-unknown"}
        assert SUITES["expedia-known"].needs_params
        assert not SUITES["general"].needs_params


class TestRunSuite:
    """套件运行测试类"""

    def test_general_suite(self, temp_dir):
        """测试一般模型套件写出每对 CSV 与汇总"""
        result = run_suite("general", horizon=30, replications=1, seed=0, out_dir=temp_dir / "general")
        assert len(result.csv_paths) == 6
        assert all(path.exists() for path in result.csv_paths)
        assert (temp_dir / "general" / "ex4__gp2.csv").exists()

        with open(result.summary_path, encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == SUMMARY_HEADER
        assert len(rows) == 7
        assert rows[1][:4] == ["ex4", "gp2", "30", "1"]
        assert all(float(row[4]) >= 0.0 for row in rows[1:])
        assert [float(row[4]) for row in rows[1:]] == [mean for _, _, mean, _ in result.summary]

    def test_unknown_suite(self, temp_dir):
        """测试未知套件名"""
        with pytest.raises(ValidationError):
            run_suite("nested", 10, 1, 0, temp_dir)

    def test_calibrated_suite_needs_params(self, temp_dir):
        """测试 Expedia 套件缺少参数文件"""
        with pytest.raises(ValidationError) as exc_info:
            run_suite("expedia-known", 10, 1, 0, temp_dir)
        assert exc_info.value.field == "params"

    def test_calibrated_suite(self, temp_dir, calibrated_params_path):
        """测试 Expedia 未知 θ 套件"""
        result = run_suite("expedia-unknown", horizon=10, replications=1, seed=0, out_dir=temp_dir / "exp",
                           params_path=calibrated_params_path)
        names = [row[0] for row in result.summary]
        assert names == ["ex10", "ex11", "ex12"]
        assert all(policy == "ep2mle" for _, policy, _, _ in result.summary)
