"""核心模块

包含系统的数值核心：
- choice_model: 实例、放置方案、MNL选择概率与采样
- instance_io: 实例文件读写
- static_opt: Dinkelbach + 二部匹配的静态最优化
- estimation: 成对统计、截断MLE与置信上界
- simulator: 仿真循环与遗憾汇总
"""
