"""PosMNL - 位置感知MNL多臂老虎机

同时学习商品吸引力与展示位置效应，并在每轮决定展示哪些商品、放在哪个位置。
"""

__version__ = "0.1.0"
__author__ = "PosMNL Team"
