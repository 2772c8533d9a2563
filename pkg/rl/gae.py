"""广义优势估计"""
from __future__ import annotations

from typing import Sequence

import numpy as np


def gae(
    rewards: Sequence[float] | np.ndarray,
    values: Sequence[float] | np.ndarray,
    dones: Sequence[bool] | np.ndarray,
    gamma: float = 0.99,
    lam: float = 0.95,
) -> tuple[np.ndarray, np.ndarray]:
    """计算 (advantages, returns)

    values 长度为 T 时末尾自举值取 0；长度为 T + 1 时最后一个元素是自举值。
    done 为真的步之后不向前传播价值。返回的优势未做归一化。
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(dones, dtype=bool)
    steps = len(r)

    if len(d) != steps:
        raise ValueError(f"dones 长度 {len(d)} 与 rewards 长度 {steps} 不一致")
    if len(v) == steps:
        v = np.append(v, 0.0)
    elif len(v) != steps + 1:
        raise ValueError(f"values 长度必须为 {steps} 或 {steps + 1}，实际 {len(v)}")

    advantages = np.zeros(steps, dtype=np.float64)
    running = 0.0
    for t in reversed(range(steps)):
        not_done = 0.0 if d[t] else 1.0
        delta = r[t] + gamma * v[t + 1] * not_done - v[t]
        running = delta + gamma * lam * not_done * running
        advantages[t] = running
    return advantages, advantages + v[:steps]


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """零均值、单位方差；单个样本或方差为 0 时只去均值"""
    a = np.asarray(advantages, dtype=np.float64)
    if a.size <= 1:
        return a - a.mean() if a.size else a
    centered = a - a.mean()
    std = centered.std()
    if std < eps:
        return centered
    return centered / std
