"""记忆库检索

穷举扫描：score = cosine(query, entry) * exp(-lambda * (now - timestamp))。
分数相同时时间戳新的排前面，再按 entry_id 升序。
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from models import IntentEntry
from memory.aging import age_factor

if TYPE_CHECKING:
    from memory.store import MemoryStore


def retrieve_topk(
    store: "MemoryStore",
    query_embedding: np.ndarray,
    k: int,
    lam: float | None = None,
    now: int | None = None,
) -> list[tuple[IntentEntry, float]]:
    """返回老化分数最高的 min(k, len(store)) 条记录

    Args:
        store: 记忆库
        query_embedding: 查询向量（单位长度）
        k: 返回条数，必须 >= 1
        lam: 老化系数，默认取 store.aging_lambda
        now: 当前事件时钟，默认取 store.clock

    Returns:
        [(entry, score), ...]，按分数降序
    """
    if k < 1:
        raise ValueError(f"k 必须 >= 1: {k}")

    entries = store.snapshot()
    if not entries:
        return []

    lam = store.aging_lambda if lam is None else lam
    now = store.clock if now is None else now

    q = np.asarray(query_embedding, dtype=np.float64)
    q_norm = np.linalg.norm(q)
    matrix = np.stack([e.embedding for e in entries])
    norms = np.linalg.norm(matrix, axis=1) * q_norm
    cos = np.divide(matrix @ q, norms, out=np.zeros(len(entries)), where=norms > 0)

    scores = cos * age_factor([e.timestamp for e in entries], now, lam)

    order = sorted(
        range(len(entries)),
        key=lambda i: (-scores[i], -entries[i].timestamp, entries[i].entry_id),
    )
    return [(entries[i], float(scores[i])) for i in order[:k]]
