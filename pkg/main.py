#!/usr/bin/env python3
"""
位置感知MNL多臂老虎机 - 主启动脚本

使用方法:
    python main.py optimize instance.json             # 静态最优放置
    python main.py gen-instance --example 4 --out ex4.json
    python main.py simulate --instance ex1 --policy p2mle --horizon 2000 --reps 5 --seed 7 --out r.csv
    python main.py extract-params train.csv --out params.json
    python main.py selftest                           # 优化器与估计器自检
    python main.py suite general --out-dir results/   # 对比实验套件
    python main.py --help                             # 显示帮助信息
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.cli.interface import cli_main


if __name__ == "__main__":
    sys.exit(cli_main(sys.argv[1:]))
