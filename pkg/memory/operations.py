"""记忆库操作

提供结果记录、冗余合并与初始化导入。
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from models import IntentEntry, PreferenceVector, QoEMetrics
from intent.embedding import Embedder, embed

from .store import MemoryStore

logger = logging.getLogger(__name__)

SEED_PATH = Path(__file__).resolve().parent.parent / "data" / "seed_memory.jsonl"


# ============================================================
# 冗余控制
# ============================================================

class GateDecision(str, Enum):
    INSERTED = "Inserted"
    MERGED = "Merged"


@dataclass(frozen=True)
class GateResult:
    decision: GateDecision
    entry_id: int
    similarity: float = 0.0


def _merge(existing: IntentEntry, candidate: IntentEntry) -> IntentEntry:
    """按 merge_count 加权平均偏好与嵌入，再分别投回单纯形和单位球"""
    w_old, w_new = existing.merge_count, candidate.merge_count
    total = w_old + w_new

    pref = (w_old * existing.preference.as_array() + w_new * candidate.preference.as_array()) / total
    pref = pref / pref.sum()

    emb = (w_old * existing.embedding + w_new * candidate.embedding) / total
    norm = np.linalg.norm(emb)
    emb = emb / norm if norm > 0 else existing.embedding

    return replace(
        existing,
        embedding=emb,
        preference=PreferenceVector.from_weights(pref),
        timestamp=max(existing.timestamp, candidate.timestamp),
        merge_count=total,
        outcome_summary=candidate.outcome_summary or existing.outcome_summary,
    )


def redundancy_gate(store: MemoryStore, candidate: IntentEntry, tau: float | None = None) -> GateResult:
    """与最相似条目的余弦 >= tau 时合并，否则作为新条目插入"""
    tau = store.tau if tau is None else tau

    with store.lock:
        entries = store._entries_unlocked()
        best_idx, best_sim = -1, -np.inf
        if entries:
            sims = np.stack([e.embedding for e in entries]) @ candidate.embedding
            best_idx = int(np.argmax(sims))
            best_sim = float(sims[best_idx])

        store.advance_clock(candidate.timestamp)

        if best_idx >= 0 and best_sim >= tau - 1e-12:
            merged = _merge(entries[best_idx], candidate)
            store._replace(merged)
            return GateResult(GateDecision.MERGED, merged.entry_id, best_sim)

        inserted = store._append(candidate)
        return GateResult(GateDecision.INSERTED, inserted.entry_id, max(best_sim, 0.0))


# ============================================================
# 结果记录
# ============================================================

def log_outcome(
    store: MemoryStore,
    intent_text: str,
    preference: PreferenceVector,
    metrics: QoEMetrics | None = None,
    timestamp: int | None = None,
    embedder: Embedder | None = None,
) -> IntentEntry:
    """把一次编排结果写入记忆库

    Args:
        store: 记忆库
        intent_text: 意图文本（不能为空）
        preference: 本次使用的偏好向量
        metrics: 观测到的 QoE 指标，作为 outcome_summary 保存
        timestamp: 事件时间戳，默认取 store.clock + 1

    Returns:
        插入或合并后的条目
    """
    if not intent_text or not intent_text.strip():
        raise ValueError("意图文本为空")
    preference.validate()

    ts = store.clock + 1 if timestamp is None else int(timestamp)
    candidate = IntentEntry(
        entry_id=-1,
        intent_text=intent_text.strip(),
        embedding=embed(intent_text, embedder),
        preference=PreferenceVector.from_weights(preference.as_array(), normalize=True),
        timestamp=ts,
        merge_count=1,
        outcome_summary=metrics.to_dict() if metrics is not None else None,
    )
    result = redundancy_gate(store, candidate)
    logger.debug("记录意图 %r -> %s #%d", intent_text[:40], result.decision.value, result.entry_id)

    for entry in store.snapshot():
        if entry.entry_id == result.entry_id:
            return entry
    raise KeyError(result.entry_id)


# ============================================================
# 初始化导入
# ============================================================

@dataclass
class BootstrapSummary:
    """bootstrap 的导入统计"""
    inserted: int = 0
    merged: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)   # (记录序号, 原因)


def load_seed_records(path: str | Path | None = None) -> list[dict]:
    """读取历史切片日志种子文件（每行一个 JSON 对象）"""
    seed_path = Path(path) if path else SEED_PATH
    records = []
    for line in seed_path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def bootstrap(store: MemoryStore, seed_records: Iterable[dict]) -> BootstrapSummary:
    """以时间戳 0 把种子记录经冗余门导入记忆库；无效记录跳过并在汇总中报告"""
    summary = BootstrapSummary()
    for idx, record in enumerate(seed_records):
        try:
            text = str(record["intent_text"])
            preference = PreferenceVector.from_weights(record["preference"]).validate()
            candidate = IntentEntry(
                entry_id=-1,
                intent_text=text.strip(),
                embedding=embed(text),
                preference=preference,
                timestamp=0,
            )
        except (KeyError, TypeError, ValueError) as e:
            summary.skipped.append((idx, str(e)))
            logger.warning("跳过种子记录 %d: %s", idx, e)
            continue

        result = redundancy_gate(store, candidate)
        if result.decision is GateDecision.INSERTED:
            summary.inserted += 1
        else:
            summary.merged += 1

    logger.info("记忆库初始化: 插入 %d, 合并 %d, 跳过 %d", summary.inserted, summary.merged, len(summary.skipped))
    return summary
