#!/usr/bin/env python3
"""
位置感知MNL多臂老虎机系统 - 异常定义模块
"""

from typing import Optional, Dict, Any, List


class PosMNLException(Exception):
    """
    系统基础异常类
    """

    def __init__(self, message: str, error_code: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or "POSMNL_ERROR"
        self.details = details or {}

    def __str__(self) -> str:
        return f"[{self.error_code}] {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details
        }


class ValidationError(PosMNLException):
    """
    输入校验异常（实例、放置方案、参数越界等）
    """

    def __init__(self, message: str, field: Optional[str] = None, value: Optional[Any] = None, **kwargs):
        super().__init__(message, "VALIDATION_ERROR", kwargs)
        self.field = field
        self.value = value


class PreconditionError(PosMNLException):
    """
    前置条件不满足（调用方应走其它分支）
    """

    def __init__(self, message: str, operation: Optional[str] = None, **kwargs):
        super().__init__(message, "PRECONDITION_ERROR", kwargs)
        self.operation = operation


class ConvergenceError(PosMNLException):
    """
    迭代算法未在上限内收敛
    """

    def __init__(self, message: str, lambda_trace: Optional[List[float]] = None, **kwargs):
        super().__init__(message, "CONVERGENCE_ERROR", kwargs)
        self.lambda_trace = list(lambda_trace or [])


class EnumerationBudgetError(PosMNLException):
    """
    枚举规模超出预算
    """

    def __init__(self, message: str, size: Optional[int] = None, budget: Optional[int] = None, **kwargs):
        super().__init__(message, "ENUMERATION_BUDGET_ERROR", kwargs)
        self.size = size
        self.budget = budget


class ProtocolError(PosMNLException):
    """
    策略调用协议违规（select/observe 未交替）
    """

    def __init__(self, message: str, policy_name: Optional[str] = None, **kwargs):
        super().__init__(message, "PROTOCOL_ERROR", kwargs)
        self.policy_name = policy_name


class SchemaError(PosMNLException):
    """
    输入数据缺少必需列
    """

    def __init__(self, message: str, column: Optional[str] = None, **kwargs):
        super().__init__(message, "SCHEMA_ERROR", kwargs)
        self.column = column


class DataIngestError(PosMNLException):
    """
    点击日志处理异常（空子集、无法归一化等）
    """

    def __init__(self, message: str, stage: Optional[str] = None, **kwargs):
        super().__init__(message, "DATA_INGEST_ERROR", kwargs)
        self.stage = stage


class ConfigurationError(PosMNLException):
    """
    配置异常
    """

    def __init__(self, message: str, config_key: Optional[str] = None, **kwargs):
        super().__init__(message, "CONFIGURATION_ERROR", kwargs)
        self.config_key = config_key


class StorageError(PosMNLException):
    """
    文件读写异常
    """

    def __init__(self, message: str, operation: Optional[str] = None, path: Optional[str] = None, **kwargs):
        super().__init__(message, "STORAGE_ERROR", kwargs)
        self.operation = operation
        self.path = path


class OracleMismatchError(PosMNLException):
    """
    Dinkelbach结果与穷举结果不一致
    """

    def __init__(self, message: str, fast_value: Optional[float] = None, oracle_value: Optional[float] = None, **kwargs):
        super().__init__(message, "ORACLE_MISMATCH_ERROR", kwargs)
        self.fast_value = fast_value
        self.oracle_value = oracle_value
