"""随机流派生

所有随机性都来自 numpy 的 SeedSequence 派生流：
stream(master, rep, channel)。channel 0 供顾客选择采样使用，channel 1 供策略内部
（如探索阶段的随机放置）使用。两条流互不干扰，因此并行执行重复实验不会改变结果。
顾客选择每轮恰好消耗一个均匀随机数，第 t 轮的选择即环境流中的第 t 个数。
"""

from typing import Optional

import numpy as np

ENVIRONMENT_CHANNEL = 0
POLICY_CHANNEL = 1


def make_stream(master_seed: int, rep: int = 0, channel: int = ENVIRONMENT_CHANNEL) -> np.random.Generator:
    """派生一个独立随机流（PCG64）"""
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(rep), int(channel)))
    return np.random.Generator(np.random.PCG64(sequence))


def as_generator(rng: Optional[object] = None) -> np.random.Generator:
    """把种子或 None 统一转换为 Generator"""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)  # type: ignore[arg-type]
