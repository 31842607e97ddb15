"""配置加载测试"""
import json

import pytest
import yaml

from config.settings import (
    Environment,
    EstimationConfig,
    LogLevel,
    OptimizerConfig,
    PosMNLConfig,
    get_config,
    reload_config,
)
from src.utils.exceptions import ConfigurationError


class TestDefaults:
    """默认配置测试类"""

    def test_section_defaults(self):
        """测试各配置段的默认值"""
        assert OptimizerConfig().epsilon == 0.0
        assert OptimizerConfig().enumeration_budget == 10 ** 7
        assert EstimationConfig().explore_c == 0.1
        assert EstimationConfig().theta_floor == 0.01

    def test_testing_environment(self):
        """测试测试环境的覆盖"""
        config = PosMNLConfig(Environment.TESTING)
        assert config.env == Environment.TESTING
        assert config.simulation.replications == 5
        assert config.logging.level == LogLevel.WARNING
        assert config.logging.file_enabled is False

    def test_production_environment(self):
        """测试生产环境的覆盖"""
        config = PosMNLConfig(Environment.PRODUCTION)
        assert config.logging.json_format is True
        assert config.simulation.replications == 50
        assert config.simulation.workers >= 1

    def test_global_instance(self):
        """测试全局配置实例"""
        assert get_config() is get_config()
        assert get_config().env == Environment.TESTING


class TestEnvironmentOverrides:
    """环境变量覆盖测试类"""

    def test_log_level(self, monkeypatch):
        """测试 LOG_LEVEL"""
        monkeypatch.setenv("LOG_LEVEL", "debug")
        assert PosMNLConfig(Environment.TESTING).logging.level == LogLevel.DEBUG

    def test_invalid_log_level(self, monkeypatch):
        """测试非法 LOG_LEVEL"""
        monkeypatch.setenv("LOG_LEVEL", "chatty")
        with pytest.raises(ConfigurationError):
            PosMNLConfig(Environment.TESTING)

    def test_workers_and_seed(self, monkeypatch):
        """测试 POSMNL_WORKERS 与 POSMNL_SEED"""
        monkeypatch.setenv("POSMNL_WORKERS", "3")
        monkeypatch.setenv("POSMNL_SEED", "17")
        config = PosMNLConfig(Environment.TESTING)
        assert config.simulation.workers == 3
        assert config.simulation.seed == 17

    def test_non_integer_workers(self, monkeypatch):
        """测试非整数的 POSMNL_WORKERS"""
        monkeypatch.setenv("POSMNL_WORKERS", "many")
        with pytest.raises(ConfigurationError) as exc_info:
            PosMNLConfig(Environment.TESTING)
        assert exc_info.value.config_key == "POSMNL_WORKERS"

    def test_unknown_environment(self, monkeypatch):
        """测试未知的 POSMNL_ENV"""
        monkeypatch.setenv("POSMNL_ENV", "staging")
        with pytest.raises(ConfigurationError):
            PosMNLConfig()

    def test_reload(self, monkeypatch):
        """测试重新加载后替换全局实例"""
        monkeypatch.setenv("POSMNL_SEED", "5")
        try:
            assert reload_config(Environment.TESTING).simulation.seed == 5
        finally:
            monkeypatch.delenv("POSMNL_SEED")
            reload_config(Environment.TESTING)


class TestValidation:
    """配置校验测试类"""

    def test_invalid_section_value(self, monkeypatch):
        """测试非法取值被拒绝"""
        monkeypatch.setattr(PosMNLConfig, "_apply_testing_config",
                            lambda self: setattr(self.estimation, "explore_c", 0.0))
        with pytest.raises(ConfigurationError) as exc_info:
            PosMNLConfig(Environment.TESTING)
        assert "explore_c" in str(exc_info.value)

    def test_unknown_keys_ignored(self):
        """测试配置文件中的未知键被忽略"""
        config = PosMNLConfig(Environment.TESTING)
        config._apply_config_data({"optimizer": {"epsilon": 0.01, "unknown": 1}, "nested": {"a": 1}})
        assert config.optimizer.epsilon == 0.01
        assert not hasattr(config.optimizer, "unknown")


class TestSaveToFile:
    """配置导出测试类"""

    def test_json(self, temp_dir):
        """测试导出 JSON"""
        path = temp_dir / "config.json"
        PosMNLConfig(Environment.TESTING).save_to_file(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["env"] == "testing"
        assert data["logging"]["level"] == "WARNING"

    def test_yaml(self, temp_dir):
        """测试导出 YAML"""
        path = temp_dir / "config.yaml"
        PosMNLConfig(Environment.TESTING).save_to_file(path)
        assert yaml.safe_load(path.read_text(encoding="utf-8"))["simulation"]["replications"] == 5

    def test_unsupported_format(self, temp_dir):
        """测试不支持的格式"""
        with pytest.raises(ConfigurationError):
            PosMNLConfig(Environment.TESTING).save_to_file(temp_dir / "config.toml")
