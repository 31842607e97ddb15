"""PosMNL测试模块

包含系统的测试用例：
- unit: 单元测试
- integration: 集成测试
- slow / acceptance: 完整仿真的验收测试
"""
