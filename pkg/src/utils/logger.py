#!/usr/bin/env python3
"""
位置感知MNL多臂老虎机系统 - 日志工具模块

控制台输出统一写到标准错误，标准输出留给 `optimize` 等子命令的机器可读结果。
"""

import logging
import logging.config
import os
import sys
from pathlib import Path
from typing import Optional, Dict, Any

import yaml
from pythonjsonlogger import jsonlogger

# 日志格式配置
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# 默认日志级别
DEFAULT_LEVEL = getattr(logging, os.getenv("LOG_LEVEL", "WARNING").upper(), logging.WARNING)

# 日志文件路径
LOG_DIR = Path(os.getenv("POSMNL_LOG_DIR", "logs"))

# dictConfig 格式的日志配置文件
LOGGING_YAML = Path(__file__).resolve().parent.parent.parent / "config" / "logging.yaml"


def get_logger(name: str, level: Optional[int] = None) -> logging.Logger:
    """
    获取配置好的日志记录器

    Args:
        name: 日志记录器名称
        level: 日志级别，默认取 LOG_LEVEL 环境变量（缺省 WARNING）

    Returns:
        配置好的日志记录器
    """
    logger = logging.getLogger(name)

    # 避免重复配置
    if logger.handlers:
        return logger

    logger.setLevel(level or DEFAULT_LEVEL)

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)

    # 控制台处理器
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger


def setup_logging(level: str = "INFO", json_format: bool = False, log_file: Optional[str] = None) -> None:
    """
    设置全局日志配置

    优先加载 config/logging.yaml；随后把级别与格式应用到已创建的 src.* 记录器上。

    Args:
        level: 日志级别字符串
        json_format: 是否输出JSON结构化日志
        log_file: 可选的日志文件路径
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    if LOGGING_YAML.exists():
        with open(LOGGING_YAML, "r", encoding="utf-8") as f:
            logging.config.dictConfig(yaml.safe_load(f))

    if json_format:
        formatter: logging.Formatter = jsonlogger.JsonFormatter(
            "%(asctime)s %(name)s %(levelname)s %(message)s", DATE_FORMAT
        )
    else:
        formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)

    for name, logger in list(logging.Logger.manager.loggerDict.items()):
        if isinstance(logger, logging.Logger) and name.startswith("src"):
            logger.setLevel(numeric_level)
            logger.handlers = list(handlers)
            logger.propagate = False


class ReplicationLoggerAdapter(logging.LoggerAdapter):
    """
    仿真专用日志适配器，添加重复实验编号与策略上下文
    """

    def process(self, msg: Any, kwargs: Dict[str, Any]):
        extra = self.extra or {}

        if "policy" in extra:
            msg = f"[Policy:{extra['policy']}] {msg}"

        if "rep" in extra:
            msg = f"[Rep:{extra['rep']}] {msg}"

        return msg, kwargs


def get_run_logger(name: str, rep: int, policy: Optional[str] = None) -> ReplicationLoggerAdapter:
    """
    获取带重复实验编号的日志记录器

    Args:
        name: 日志记录器名称
        rep: 重复实验编号
        policy: 策略标识

    Returns:
        带上下文的日志适配器
    """
    extra: Dict[str, Any] = {"rep": rep}
    if policy is not None:
        extra["policy"] = policy
    return ReplicationLoggerAdapter(get_logger(name), extra)
