"""选择模型与实例文件测试"""
import json

import numpy as np
import pytest
from scipy import stats

from src.core.choice_model import (
    OUTSIDE,
    ChoiceOutcome,
    Instance,
    ModelKind,
    Placement,
    attraction,
    choice_distribution,
    expected_revenue,
    sample_choice,
)
from src.core.instance_io import dump_instance, instance_from_dict, instance_to_dict, load_instance
from src.modules.instances import random_instance
from src.utils.exceptions import StorageError, ValidationError


def _random_placement(instance: Instance, rng: np.random.Generator) -> Placement:
    size = int(rng.integers(0, instance.K + 1))
    products = rng.choice(instance.N, size=size, replace=False)
    positions = rng.choice(instance.K, size=size, replace=False)
    return Placement(tuple(sorted((int(i), int(k)) for i, k in zip(products, positions))))


class TestInstance:
    """实例测试类"""

    def test_example_one_accessors(self, ex1):
        """测试乘法模型实例的访问器"""
        assert ex1.N == 3
        assert ex1.K == 2
        assert ex1.kind == ModelKind.MULTIPLICATIVE
        assert ex1.theta_min == pytest.approx(0.5)
        assert attraction(ex1, 2, 1) == pytest.approx(0.4)

    def test_theta_must_be_normalized(self):
        """测试 θ 最大值必须为 1"""
        with pytest.raises(ValidationError):
            Instance.multiplicative("bad", revenues=[0.5, 0.5], v=[0.5, 0.5], theta=[0.9, 0.5])

    def test_k_larger_than_n_rejected(self):
        """测试 K > N 被拒绝"""
        with pytest.raises(ValidationError):
            Instance.general("bad", revenues=[0.5], V=[[0.5, 0.5]])

    def test_revenue_out_of_range_rejected(self):
        """测试收益超出 [0, 1] 被拒绝"""
        with pytest.raises(ValidationError):
            Instance.general("bad", revenues=[1.5], V=[[0.5]])

    def test_zero_attraction_rejected(self):
        """测试吸引力为 0 被拒绝"""
        with pytest.raises(ValidationError):
            Instance.general("bad", revenues=[0.5, 0.5], V=[[0.5], [0.0]])

    def test_to_general_keeps_matrix(self, ex1):
        """测试乘法模型嵌入一般模型后吸引力矩阵不变"""
        general = ex1.to_general()
        assert general.kind == ModelKind.GENERAL
        np.testing.assert_array_equal(general.attraction_matrix(), ex1.attraction_matrix())

    def test_attraction_out_of_range(self, ex1):
        """测试越界索引"""
        with pytest.raises(ValidationError):
            attraction(ex1, 3, 0)


class TestPlacement:
    """放置方案测试类"""

    def test_duplicate_product_rejected(self):
        """测试同一商品出现两次"""
        with pytest.raises(ValidationError):
            Placement(((0, 0), (0, 1)))

    def test_duplicate_position_rejected(self):
        """测试同一位置放两个商品"""
        with pytest.raises(ValidationError):
            Placement(((0, 1), (2, 1)))

    def test_pairs_sorted_by_product(self):
        """测试对列表按商品排序"""
        placement = Placement(((2, 0), (0, 1)))
        assert placement.pairs == ((0, 1), (2, 0))
        assert placement.position_of(2) == 0
        assert placement.position_of(1) is None

    def test_external_indices(self, ex1_placement):
        """测试外部 1 起始索引的转换"""
        assert ex1_placement.pairs == ((0, 0), (2, 1))
        assert ex1_placement.to_pairs() == [[1, 1], [3, 2]]

    def test_validate_for_out_of_range_position(self, ex1):
        """测试位置越界"""
        with pytest.raises(ValidationError):
            expected_revenue(ex1, Placement(((0, 2),)))

    def test_outcome_external_code(self):
        """测试外部选项编码"""
        assert OUTSIDE.to_external() == 0
        assert ChoiceOutcome(2).to_external() == 3


class TestChoiceProbabilities:
    """选择概率与期望收益测试类"""

    def test_example_one_distribution(self, ex1, ex1_placement):
        """测试算例 1 上的选择概率"""
        probabilities = choice_distribution(ex1, ex1_placement)
        np.testing.assert_allclose(probabilities, [20 / 33, 5 / 33, 8 / 33], rtol=0, atol=1e-12)

    def test_example_one_revenue(self, ex1, ex1_placement):
        """测试算例 1 上的期望收益"""
        assert expected_revenue(ex1, ex1_placement) == pytest.approx(8 / 33, abs=1e-12)

    def test_empty_placement(self, ex1):
        """测试空放置方案"""
        assert expected_revenue(ex1, Placement.empty()) == 0.0
        np.testing.assert_array_equal(choice_distribution(ex1, Placement.empty()), [1.0])

    def test_unit_instance_revenue(self, unit_instance):
        """测试 N = K = 1 的收益为 1/2"""
        assert expected_revenue(unit_instance, Placement(((0, 0),))) == pytest.approx(0.5)

    def test_general_embedding_gives_same_distribution(self):
        """测试乘法模型与其一般模型嵌入的选择概率一致"""
        for seed in range(30):
            instance = random_instance(6, 3, "multiplicative", seed)
            placement = _random_placement(instance, np.random.default_rng(seed))
            np.testing.assert_allclose(choice_distribution(instance.to_general(), placement),
                                       choice_distribution(instance, placement), rtol=0, atol=1e-15)

    def test_distribution_sums_to_one(self):
        """测试随机放置方案上概率之和为 1"""
        for seed in range(30):
            instance = random_instance(6, 3, "general", seed)
            probabilities = choice_distribution(instance, _random_placement(instance, np.random.default_rng(seed)))
            assert probabilities.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(probabilities >= 0)

    def test_adding_product_lowers_outside_probability(self):
        """测试再加入一个商品时外部选项概率严格下降"""
        instance = random_instance(6, 3, "general", 3)
        smaller = Placement(((1, 0),))
        larger = Placement(((1, 0), (4, 2)))
        assert choice_distribution(instance, larger)[0] < choice_distribution(instance, smaller)[0]
        assert choice_distribution(instance, smaller)[0] < choice_distribution(instance, Placement.empty())[0]


class TestSampleChoice:
    """顾客选择采样测试类"""

    def test_consumes_exactly_one_uniform(self, ex1, ex1_placement):
        """测试每次调用恰好消耗一个均匀随机数"""
        a = np.random.default_rng(7)
        b = np.random.default_rng(7)
        sample_choice(ex1, ex1_placement, a)
        b.random()
        assert a.random() == b.random()

    def test_same_seed_same_trajectory(self, ex1, ex1_placement):
        """测试相同种子得到相同选择序列"""
        a = np.random.default_rng(3)
        b = np.random.default_rng(3)
        first = [sample_choice(ex1, ex1_placement, a).chosen for _ in range(50)]
        second = [sample_choice(ex1, ex1_placement, b).chosen for _ in range(50)]
        assert first == second

    def test_empty_placement_always_outside(self, ex1, rng):
        """测试空放置方案只会选外部选项"""
        assert all(sample_choice(ex1, Placement.empty(), rng).is_outside for _ in range(20))

    def test_goodness_of_fit(self, ex1, ex1_placement):
        """测试采样频率与选择概率一致（卡方检验）"""
        rng = np.random.default_rng(2024)
        draws = 20_000
        counts = {-1: 0, 0: 0, 2: 0}
        for _ in range(draws):
            counts[sample_choice(ex1, ex1_placement, rng).chosen] += 1
        observed = np.array([counts[-1], counts[0], counts[2]])
        expected = np.array([20 / 33, 5 / 33, 8 / 33]) * draws
        assert stats.chisquare(observed, expected).pvalue > 1e-3


class TestInstanceIO:
    """实例文件读写测试类"""

    def test_round_trip_general(self, ex4, temp_dir):
        """测试一般模型实例写出后读回不变"""
        path = dump_instance(ex4, temp_dir / "ex4.json")
        loaded = load_instance(path)
        assert instance_to_dict(loaded) == instance_to_dict(ex4)

    def test_missing_field(self, ex1):
        """测试缺少字段时给出字段名"""
        data = instance_to_dict(ex1)
        del data["model"]["theta"]
        with pytest.raises(ValidationError) as exc_info:
            instance_from_dict(data)
        assert exc_info.value.field == "model.theta"

    def test_wrong_length(self, ex1):
        """测试向量长度与 N 不符"""
        data = instance_to_dict(ex1)
        data["revenues"] = [0.5]
        with pytest.raises(ValidationError):
            instance_from_dict(data)

    def test_unknown_model_type(self, ex1):
        """测试未知模型类型"""
        data = instance_to_dict(ex1)
        data["model"]["type"] = "nested"
        with pytest.raises(ValidationError):
            instance_from_dict(data)

    def test_malformed_json_reports_position(self, temp_dir):
        """测试 JSON 语法错误时报告行列"""
        path = temp_dir / "broken.json"
        path.write_text('{\n  "name": "x",\n  "N": \n}', encoding="utf-8")
        with pytest.raises(ValidationError) as exc_info:
            load_instance(path)
        assert "line" in str(exc_info.value)

    def test_missing_file(self, temp_dir):
        """测试文件不存在"""
        with pytest.raises(StorageError):
            load_instance(temp_dir / "absent.json")

    def test_metadata_preserved(self, temp_dir):
        """测试 metadata 字段被保留"""
        instance = Instance.general("meta", [1.0, 1.0], [[0.5], [0.5]], metadata={"epsilon": 0.1})
        loaded = load_instance(dump_instance(instance, temp_dir / "meta.json"))
        assert loaded.metadata == {"epsilon": 0.1}
        assert json.loads((temp_dir / "meta.json").read_text())["K"] == 1
