"""系统配置文件

包含系统的所有配置项，支持环境变量覆盖和配置验证。

配置层级：
1. 默认配置（此文件）
2. 环境预设（development / testing / production）
3. 环境变量覆盖
4. 配置文件覆盖（config/<env>.yaml）
5. 运行时参数覆盖（CLI 选项）
"""

import os
import json
from pathlib import Path
from typing import Dict, Optional, Any, Union
from dataclasses import dataclass, asdict
from enum import Enum

import yaml

from src.utils.exceptions import ConfigurationError


class Environment(Enum):
    """环境类型"""
    DEVELOPMENT = "development"
    TESTING = "testing"
    PRODUCTION = "production"


class LogLevel(Enum):
    """日志级别"""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


@dataclass
class OptimizerConfig:
    """静态优化配置"""
    epsilon: float = 0.0  # Dinkelbach 终止容差
    zero_tolerance: float = 1e-12  # |F| 低于此值视为 0
    max_iterations: int = 100
    enumeration_budget: int = 10 ** 7  # 穷举可行放置的上限


@dataclass
class EstimationConfig:
    """参数估计配置"""
    root_tolerance: float = 1e-10
    explore_c: float = 0.1  # J0(T) = ceil(c * sqrt(T))
    theta_floor: float = 0.01


@dataclass
class SimulationConfig:
    """仿真默认配置"""
    replications: int = 50
    seed: int = 0
    full_trace_limit: int = 10_000  # 超过该轮数时按步长抽样输出
    workers: int = 1
    cross_check_oracle: bool = True


@dataclass
class IngestConfig:
    """点击日志抽取配置"""
    prop_id_column: str = "prop_id"
    position_column: str = "position"
    click_column: str = "click_bool"
    random_column: str = "random_bool"
    price_column: str = "price_usd"
    min_position_obs: int = 1000
    min_item_obs: int = 1
    price_quantile: float = 0.95
    v_floor: float = 0.01
    theta_floor: float = 0.01
    min_v: float = 0.1


@dataclass
class LoggingConfig:
    """日志配置"""
    level: LogLevel = LogLevel.WARNING
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    date_format: str = "%Y-%m-%d %H:%M:%S"
    json_format: bool = False
    file_enabled: bool = False
    file_path: str = "logs/posmnl.log"


class PosMNLConfig:
    """系统主配置类"""

    SECTIONS = ("optimizer", "estimation", "simulation", "ingest", "logging")

    def __init__(self, env: Optional[Environment] = None):
        try:
            self.env = env or Environment(os.getenv("POSMNL_ENV", "development"))
        except ValueError as e:
            raise ConfigurationError(f"Unknown environment: {os.getenv('POSMNL_ENV')}", config_key="POSMNL_ENV") from e
        self.project_root = Path(__file__).parent.parent

        # 加载配置
        self._load_default_config()
        self._load_config_file()
        self._load_environment_config()
        self._validate_config()

    def _load_default_config(self):
        """加载默认配置"""
        self.optimizer = OptimizerConfig()
        self.estimation = EstimationConfig()
        self.simulation = SimulationConfig()
        self.ingest = IngestConfig()
        self.logging = LoggingConfig()

        # 环境特定配置
        if self.env == Environment.DEVELOPMENT:
            self._apply_development_config()
        elif self.env == Environment.TESTING:
            self._apply_testing_config()
        elif self.env == Environment.PRODUCTION:
            self._apply_production_config()

    def _apply_development_config(self):
        """应用开发环境配置"""
        self.logging.level = LogLevel.INFO

    def _apply_testing_config(self):
        """应用测试环境配置"""
        self.logging.level = LogLevel.WARNING
        self.logging.file_enabled = False
        self.simulation.replications = 5

    def _apply_production_config(self):
        """应用生产环境配置"""
        self.logging.level = LogLevel.INFO
        self.logging.json_format = True
        self.logging.file_enabled = True
        self.simulation.workers = max(1, (os.cpu_count() or 2) - 1)

    def _load_environment_config(self):
        """从环境变量加载配置"""
        if os.getenv("LOG_LEVEL"):
            try:
                self.logging.level = LogLevel(os.getenv("LOG_LEVEL", "").upper())
            except ValueError as e:
                raise ConfigurationError(f"Invalid LOG_LEVEL: {os.getenv('LOG_LEVEL')}", config_key="LOG_LEVEL") from e

        if os.getenv("POSMNL_WORKERS"):
            self.simulation.workers = self._parse_int("POSMNL_WORKERS")

        if os.getenv("POSMNL_SEED"):
            self.simulation.seed = self._parse_int("POSMNL_SEED")

    @staticmethod
    def _parse_int(key: str) -> int:
        raw = os.getenv(key, "")
        try:
            return int(raw)
        except ValueError as e:
            raise ConfigurationError(f"{key} must be an integer, got {raw!r}", config_key=key) from e

    def _load_config_file(self):
        """从配置文件加载配置"""
        config_files = [
            self.project_root / "config" / f"{self.env.value}.yaml",
            self.project_root / "config" / "config.yaml",
        ]

        for config_file in config_files:
            if config_file.exists():
                try:
                    with open(config_file, 'r', encoding='utf-8') as f:
                        config_data = yaml.safe_load(f) or {}
                except (OSError, yaml.YAMLError) as e:
                    raise ConfigurationError(f"Failed to load config file {config_file}: {e}",
                                             config_key=str(config_file)) from e
                self._apply_config_data(config_data)
                break

    def _apply_config_data(self, config_data: Dict[str, Any]):
        """应用配置数据"""
        for section, values in config_data.items():
            if section in self.SECTIONS and isinstance(values, dict):
                config_obj = getattr(self, section)
                for key, value in values.items():
                    if not hasattr(config_obj, key):
                        continue
                    if section == "logging" and key == "level":
                        value = LogLevel(str(value).upper())
                    setattr(config_obj, key, value)

    def _validate_config(self):
        """验证配置"""
        errors = []

        if self.optimizer.epsilon < 0:
            errors.append(f"optimizer.epsilon must be >= 0, got {self.optimizer.epsilon}")
        if self.optimizer.max_iterations < 1:
            errors.append(f"optimizer.max_iterations must be >= 1, got {self.optimizer.max_iterations}")
        if self.optimizer.enumeration_budget < 1:
            errors.append("optimizer.enumeration_budget must be positive")

        if not (0 < self.estimation.root_tolerance < 1):
            errors.append(f"estimation.root_tolerance out of range: {self.estimation.root_tolerance}")
        if self.estimation.explore_c <= 0:
            errors.append(f"estimation.explore_c must be positive, got {self.estimation.explore_c}")
        if not (0 < self.estimation.theta_floor <= 1):
            errors.append(f"estimation.theta_floor must lie in (0, 1], got {self.estimation.theta_floor}")

        if self.simulation.replications < 1:
            errors.append(f"simulation.replications must be >= 1, got {self.simulation.replications}")
        if self.simulation.workers < 1:
            errors.append(f"simulation.workers must be >= 1, got {self.simulation.workers}")

        if not (0 < self.ingest.price_quantile <= 1):
            errors.append(f"ingest.price_quantile must lie in (0, 1], got {self.ingest.price_quantile}")
        if not (0 < self.ingest.v_floor <= 1):
            errors.append(f"ingest.v_floor must lie in (0, 1], got {self.ingest.v_floor}")

        if errors:
            raise ConfigurationError(f"Configuration validation failed: {'; '.join(errors)}")

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        result: Dict[str, Any] = {"env": self.env.value}
        for section in self.SECTIONS:
            data = asdict(getattr(self, section))
            if section == "logging":
                data["level"] = self.logging.level.value
            result[section] = data
        return result

    def save_to_file(self, file_path: Union[str, Path]):
        """保存配置到文件"""
        config_dict = self.to_dict()

        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)

        if file_path.suffix.lower() == '.json':
            with open(file_path, 'w', encoding='utf-8') as f:
                json.dump(config_dict, f, indent=2, ensure_ascii=False)
        elif file_path.suffix.lower() in ['.yaml', '.yml']:
            with open(file_path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(config_dict, f, default_flow_style=False, allow_unicode=True)
        else:
            raise ConfigurationError(f"Unsupported config file format: {file_path.suffix}", config_key=str(file_path))


# 全局配置实例
config = PosMNLConfig()


# 配置工具函数
def get_config() -> PosMNLConfig:
    """获取全局配置实例"""
    return config


def reload_config(env: Optional[Environment] = None) -> PosMNLConfig:
    """重新加载配置"""
    global config
    config = PosMNLConfig(env)
    return config
