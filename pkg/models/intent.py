"""意图检索相关模型

IntentEntry 是记忆库中的一条 <intent_text, preference_vector> 记录。
同一条记录可以被多次合并（merge_count），时间戳是事件计数器而非墙钟。
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .preference import PreferenceVector


@dataclass
class IntentEntry:
    """记忆库条目"""
    entry_id: int
    intent_text: str
    embedding: np.ndarray          # 单位向量，维度 D
    preference: PreferenceVector
    timestamp: int = 0             # 事件计数器
    merge_count: int = 1
    outcome_summary: dict | None = None

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "intent_text": self.intent_text,
            "preference": list(self.preference.as_tuple()),
            "timestamp": self.timestamp,
            "merge_count": self.merge_count,
            "outcome_summary": self.outcome_summary,
        }


@dataclass(frozen=True)
class Exemplar:
    """检索到的少样本示例"""
    intent_text: str
    preference: PreferenceVector
    score: float


@dataclass(frozen=True)
class Prompt:
    """少样本提示词

    exemplars 按检索分数降序排列；text 是最终发给 LLM 的字节确定的文本。
    """
    preamble: str
    exemplars: tuple[Exemplar, ...]
    query: str
    text: str = field(repr=False)
