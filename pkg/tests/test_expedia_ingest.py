"""点击日志参数抽取测试"""
import numpy as np
import pandas as pd
import pytest

from config.settings import IngestConfig
from src.modules.expedia_ingest import (
    ExtractedParams,
    ImpressionRecord,
    build_instance,
    extract_parameters,
    load_impressions,
)
from src.utils.exceptions import DataIngestError, SchemaError, StorageError, ValidationError

from .conftest import CLICK_LOG_ROWS, write_click_log


@pytest.fixture
def impressions(click_log):
    return load_impressions(click_log)


@pytest.fixture
def params(impressions):
    return extract_parameters(impressions, min_position_obs=1)


class TestLoadImpressions:
    """日志读取测试类"""

    def test_all_rows_parsed(self, impressions, click_log):
        """测试 12 行全部解析"""
        assert len(impressions) == 12
        assert impressions.rows_read == 12
        assert impressions.rows_skipped == 0
        assert impressions.summary()["source"] == str(click_log)

    def test_records(self, impressions):
        """测试逐行记录"""
        first = next(impressions.records())
        assert first == ImpressionRecord("A", 1, 1, 1, 100.0)

    def test_malformed_rows_skipped(self, temp_dir):
        """测试格式错误的行被跳过并计数"""
        rows = CLICK_LOG_ROWS + [
            (7, "E", "x", 1, 1, 10.0),
            (7, "F", 1, 2, 1, 10.0),
            (7, "", 1, 0, 1, 10.0),
            (7, "G", 1, 0, 1, -5.0),
        ]
        log = load_impressions(write_click_log(temp_dir / "dirty.csv", rows))
        assert log.rows_read == 16
        assert log.rows_skipped == 4
        assert len(log) == 12

    def test_missing_column(self, temp_dir):
        """测试缺少必需列"""
        rows = [row[:-1] for row in CLICK_LOG_ROWS]
        with pytest.raises(SchemaError) as exc_info:
            load_impressions(write_click_log(temp_dir / "no_price.csv", rows))
        assert exc_info.value.column == "price_usd"

    def test_custom_column_names(self, temp_dir):
        """测试自定义列名"""
        header = ("srch_id", "hotel", "position", "click_bool", "random_bool", "cost")
        rows = [header] + CLICK_LOG_ROWS[1:]
        columns = IngestConfig(prop_id_column="hotel", price_column="cost")
        log = load_impressions(write_click_log(temp_dir / "renamed.csv", rows), columns)
        assert len(log) == 12

    def test_missing_file(self, temp_dir):
        """测试文件不存在"""
        with pytest.raises(StorageError):
            load_impressions(temp_dir / "absent.csv")

    def test_chunked_read(self, click_log):
        """测试分块读取与整体读取一致"""
        whole = load_impressions(click_log)
        chunked = load_impressions(click_log, chunk_size=5)
        pd.testing.assert_frame_equal(whole.frame, chunked.frame)


class TestExtractParameters:
    """参数抽取测试类"""

    def test_exact_values(self, params):
        """测试随机子集上的 θ、v、r"""
        np.testing.assert_allclose(params.theta, [1.0, 0.5])
        assert params.positions == [1, 2]
        assert params.item_v == pytest.approx({"A": 1.0, "B": 0.5, "C": 0.01})
        assert params.price_cap == pytest.approx(470.0)
        assert params.item_r == pytest.approx({"A": 100 / 470, "B": 200 / 470, "C": 1.0})
        assert params.position_counts == {1: 5, 2: 5}
        assert params.item_counts == {"A": 4, "B": 4, "C": 2}

    def test_full_quantile_cap(self, impressions):
        """测试分位数为 1 时以最高平均价格为上限"""
        params = extract_parameters(impressions, min_position_obs=1, price_quantile=1.0)
        assert params.item_r == pytest.approx({"A": 0.2, "B": 0.4, "C": 1.0})

    def test_non_randomized_rows_ignored(self, impressions, params):
        """测试非随机展示的行不参与估计"""
        assert "D" not in params.item_v
        assert params.item_r["A"] == pytest.approx(100 / 470)

    def test_row_order_invariant(self, impressions, params):
        """测试结果与行序无关"""
        shuffled = impressions.frame.sample(frac=1.0, random_state=7).reset_index(drop=True)
        assert extract_parameters(shuffled, min_position_obs=1).to_dict() == params.to_dict()

    def test_price_scale_invariant(self, impressions, params):
        """测试价格整体缩放不改变收益"""
        scaled = impressions.frame.assign(price=impressions.frame["price"] * 3.0)
        rescaled = extract_parameters(scaled, min_position_obs=1)
        assert rescaled.item_r == pytest.approx(params.item_r)
        assert rescaled.price_cap == pytest.approx(3.0 * params.price_cap)

    def test_record_iterable_input(self, impressions, params):
        """测试逐行记录作为输入"""
        assert extract_parameters(list(impressions.records()), min_position_obs=1).to_dict() == params.to_dict()

    def test_k_limit(self, impressions):
        """测试只保留前 k 个位置"""
        assert extract_parameters(impressions, min_position_obs=1, k_limit=1).positions == [1]

    def test_no_randomized_rows(self, impressions):
        """测试没有随机展示的记录"""
        frame = impressions.frame.assign(randomized=0)
        with pytest.raises(DataIngestError) as exc_info:
            extract_parameters(frame, min_position_obs=1)
        assert exc_info.value.stage == "filter"

    def test_position_one_below_threshold(self, impressions):
        """测试位置 1 观测数不足"""
        with pytest.raises(DataIngestError) as exc_info:
            extract_parameters(impressions)
        assert exc_info.value.stage == "normalize"

    def test_zero_anchor_ctr(self):
        """测试位置 1 点击率为 0"""
        records = [ImpressionRecord("A", 1, 0, 1, 10.0), ImpressionRecord("A", 2, 1, 1, 10.0)]
        with pytest.raises(DataIngestError):
            extract_parameters(records, min_position_obs=1)

    def test_no_clicked_item(self):
        """测试过滤后没有被点击过的商品"""
        records = [
            ImpressionRecord("A", 1, 1, 1, 10.0),
            ImpressionRecord("B", 1, 0, 1, 10.0),
            ImpressionRecord("B", 1, 0, 1, 10.0),
        ]
        with pytest.raises(DataIngestError) as exc_info:
            extract_parameters(records, min_position_obs=1, min_item_obs=2)
        assert exc_info.value.stage == "items"

    def test_invalid_quantile(self, impressions):
        """测试非法分位数"""
        with pytest.raises(ValidationError):
            extract_parameters(impressions, min_position_obs=1, price_quantile=0.0)

    def test_missing_frame_column(self, impressions):
        """测试 DataFrame 输入缺列"""
        with pytest.raises(SchemaError):
            extract_parameters(impressions.frame.drop(columns=["price"]), min_position_obs=1)


class TestParamsFile:
    """参数文件测试类"""

    def test_save_and_load(self, params, temp_dir):
        """测试参数文件写出后读回"""
        loaded = ExtractedParams.load(params.save(temp_dir / "params.json"))
        assert loaded.to_dict() == params.to_dict()

    def test_malformed_document(self, temp_dir):
        """测试缺少字段的参数文件"""
        path = temp_dir / "params.json"
        path.write_text('{"theta": [1.0]}', encoding="utf-8")
        with pytest.raises(ValidationError):
            ExtractedParams.load(path)


class TestBuildInstance:
    """实例构造测试类"""

    def test_qualifying_items(self, params):
        """测试只使用 v >= min_v 的商品"""
        instance = build_instance(params, 2, 2, min_v=0.1, seed=0)
        assert instance.metadata["prop_ids"] == ["A", "B"]
        np.testing.assert_allclose(instance.model.v, [1.0, 0.5])
        np.testing.assert_allclose(instance.revenues, [100 / 470, 200 / 470])
        np.testing.assert_allclose(instance.model.theta, [1.0, 0.5])
        assert instance.name == "expedia-N2-K2-s0"

    def test_seed_controls_selection(self):
        """测试相同种子抽到相同商品"""
        items = [f"p{i}" for i in range(12)]
        params = ExtractedParams(theta=np.array([1.0, 0.6]), positions=[1, 2],
                                 item_v={i: 0.5 for i in items}, item_r={i: 0.5 for i in items})
        a = build_instance(params, 4, 2, seed=3)
        b = build_instance(params, 4, 2, seed=3)
        assert a.metadata["prop_ids"] == b.metadata["prop_ids"]
        assert a.metadata["prop_ids"] == sorted(a.metadata["prop_ids"])

    def test_not_enough_items(self, params):
        """测试合格商品不足 N 个"""
        with pytest.raises(ValidationError):
            build_instance(params, 3, 2, min_v=0.1)

    def test_too_many_positions(self, params):
        """测试 K 超过保留的位置数"""
        with pytest.raises(ValidationError):
            build_instance(params, 2, 3, min_v=0.0)
