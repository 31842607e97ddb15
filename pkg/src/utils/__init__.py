"""工具模块

包含系统的通用工具：
- logger: 日志系统
- exceptions: 异常定义
- seeding: 随机流派生
"""
