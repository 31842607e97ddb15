"""配置模块

包含系统的配置文件：
- settings: 基础配置（dataclass + 环境预设 + YAML 覆盖）
- development.yaml / testing.yaml / production.yaml: 环境配置
- logging.yaml: 日志配置
"""
