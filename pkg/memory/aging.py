"""时间戳软老化

检索时给每条记录乘以 exp(-lambda * (now - timestamp))。老化只降权，从不删除条目。
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .store import MemoryStore


def age_factor(timestamps: Sequence[int] | np.ndarray, now: int, lam: float) -> np.ndarray:
    if lam < 0:
        raise ValueError(f"老化系数不能为负: {lam}")
    ages = now - np.asarray(timestamps, dtype=np.float64)
    return np.exp(-lam * ages)


def age_weights(store: "MemoryStore", now: int | None = None, lam: float | None = None) -> np.ndarray:
    """按存储顺序返回各条目的老化因子"""
    now = store.clock if now is None else now
    lam = store.aging_lambda if lam is None else lam
    return age_factor([e.timestamp for e in store.snapshot()], now, lam)
