"""记忆库存储

知识库、检索库与记忆库在这里是同一个存储：条目列表 + 事件时钟。
单写多读：写操作持有锁；读操作拿到的是加锁复制出的一致快照。
合并时整条替换条目对象，已经发出的快照不会看到半更新状态。
"""
from __future__ import annotations

import threading
from typing import Iterator

from models import IntentEntry

from intent.embedding import EMBED_DIM

DEFAULT_AGING_LAMBDA = 0.002
DEFAULT_TAU = 0.95


class MemoryStore:
    """意图记忆库

    Example:
        store = MemoryStore()
        bootstrap(store, load_seed_records())
        hits = retrieve_topk(store, embed("robot arm control"), k=4)
    """

    def __init__(
        self,
        dim: int = EMBED_DIM,
        aging_lambda: float = DEFAULT_AGING_LAMBDA,
        tau: float = DEFAULT_TAU,
    ):
        if aging_lambda < 0:
            raise ValueError(f"aging_lambda 不能为负: {aging_lambda}")
        self.dim = dim
        self.aging_lambda = aging_lambda
        self.tau = tau
        self.clock = 0
        self._entries: list[IntentEntry] = []
        self._next_id = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[IntentEntry]:
        return iter(self.snapshot())

    def snapshot(self) -> list[IntentEntry]:
        with self._lock:
            return list(self._entries)

    @property
    def lock(self) -> threading.Lock:
        """写锁（redundancy_gate 在检查+写入期间持有）"""
        return self._lock

    def advance_clock(self, timestamp: int) -> None:
        self.clock = max(self.clock, int(timestamp))

    # 以下方法要求调用方已持有写锁

    def _append(self, entry: IntentEntry) -> IntentEntry:
        entry.entry_id = self._next_id
        self._next_id += 1
        self._entries.append(entry)
        return entry

    def _replace(self, entry: IntentEntry) -> None:
        for i, existing in enumerate(self._entries):
            if existing.entry_id == entry.entry_id:
                self._entries[i] = entry
                return
        raise KeyError(entry.entry_id)

    def _entries_unlocked(self) -> list[IntentEntry]:
        return self._entries
