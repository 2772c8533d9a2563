"""记忆库快照

JSONL 格式，每行一条自描述记录，UTF-8 编码：

    {"version": 1, "intent_text": "...", "embedding": [...], "preference": [wL, wR, wC],
     "timestamp": 12, "merge_count": 2, "outcome_summary": {...}}

加载时逐行用 pydantic 校验，出错的行号写进 SnapshotLoadError。
"""
from __future__ import annotations

import json
import logging
import os
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from models import IntentEntry, PreferenceVector, SnapshotLoadError

from .store import MemoryStore

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1


def get_memory_path() -> str:
    """获取记忆库快照路径

    从环境变量读取，默认为 .data/memory.jsonl
    """
    return os.getenv("SLICING_MEMORY_PATH", ".data/memory.jsonl")


class MemoryRecord(BaseModel):
    """快照中的一行"""
    model_config = ConfigDict(extra="forbid")

    version: int
    intent_text: str
    embedding: list[float]
    preference: tuple[float, float, float]
    timestamp: int
    merge_count: int = 1
    outcome_summary: dict | None = None

    @field_validator("version")
    @classmethod
    def _check_version(cls, v: int) -> int:
        if v != SNAPSHOT_VERSION:
            raise ValueError(f"不支持的快照版本 {v}（当前 {SNAPSHOT_VERSION}）")
        return v

    @field_validator("merge_count")
    @classmethod
    def _check_merge_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("merge_count 必须 >= 1")
        return v

    @classmethod
    def from_entry(cls, entry: IntentEntry) -> "MemoryRecord":
        return cls(
            version=SNAPSHOT_VERSION,
            intent_text=entry.intent_text,
            embedding=[float(x) for x in entry.embedding],
            preference=entry.preference.as_tuple(),
            timestamp=entry.timestamp,
            merge_count=entry.merge_count,
            outcome_summary=entry.outcome_summary,
        )

    def to_entry(self, entry_id: int) -> IntentEntry:
        return IntentEntry(
            entry_id=entry_id,
            intent_text=self.intent_text,
            embedding=np.asarray(self.embedding, dtype=np.float64),
            preference=PreferenceVector(*self.preference),
            timestamp=self.timestamp,
            merge_count=self.merge_count,
            outcome_summary=self.outcome_summary,
        )


def snapshot(store: MemoryStore, path: str | Path | None = None) -> Path:
    """把记忆库写到 JSONL 文件，返回文件路径"""
    out = Path(path or get_memory_path())
    out.parent.mkdir(parents=True, exist_ok=True)

    entries = store.snapshot()
    lines = [MemoryRecord.from_entry(e).model_dump_json() for e in entries]
    out.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    logger.info("记忆库快照已保存: %s (%d 条)", out, len(entries))
    return out


def load(path: str | Path | None = None, **store_kwargs) -> MemoryStore:
    """从 JSONL 快照恢复记忆库

    Args:
        path: 快照路径，默认 get_memory_path()
        **store_kwargs: 透传给 MemoryStore（aging_lambda, tau 等）

    Raises:
        SnapshotLoadError: 文件不存在、版本不符或某行损坏
    """
    src = Path(path or get_memory_path())
    try:
        text = src.read_text(encoding="utf-8")
    except OSError as e:
        raise SnapshotLoadError(str(src), 0, f"无法读取: {e}") from e

    store = MemoryStore(**store_kwargs)
    with store.lock:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = MemoryRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise SnapshotLoadError(str(src), line_no, str(e).splitlines()[0]) from e

            if len(record.embedding) != store.dim:
                raise SnapshotLoadError(
                    str(src), line_no, f"嵌入维度 {len(record.embedding)} != {store.dim}"
                )
            store._append(record.to_entry(entry_id=-1))
            store.advance_clock(record.timestamp)

    logger.info("记忆库快照已加载: %s (%d 条)", src, len(store))
    return store
