"""功能模块

包含系统的各个功能模块：
- policies: 学习策略（P2MLE-UCB、GP2-UCB、E-P2MLE-UCB、epoch 基线）
- instances: 合成算例、下界实例、随机实例
- expedia_ingest: 点击日志参数抽取
- experiments: 对比实验套件
"""
