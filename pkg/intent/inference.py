"""意图推理

embed -> retrieve_topk -> build_prompt -> llm_client.complete -> parse_preference。
解析失败或客户端异常时重试一次，仍失败则返回类别默认向量，结果总在单纯形上。
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

from models import (
    Exemplar,
    PreferenceParseError,
    PreferenceVector,
    QoEClassId,
    SliceRequest,
)

from .embedding import Embedder, embed
from .llm_client import LLMClient
from .parser import parse_preference
from .prompt import build_prompt
from .retrieval import retrieve_topk

if TYPE_CHECKING:
    from memory.store import MemoryStore

logger = logging.getLogger(__name__)

DEFAULT_K = 4
MAX_ATTEMPTS = 2

CLASS_DEFAULTS: dict[QoEClassId, PreferenceVector] = {
    QoEClassId.HIGH_PRIORITY: PreferenceVector(0.45, 0.45, 0.10),
    QoEClassId.MEDIUM_PRIORITY: PreferenceVector(0.35, 0.30, 0.35),
    QoEClassId.BEST_EFFORT: PreferenceVector(0.15, 0.15, 0.70),
}


@dataclass(frozen=True)
class InferenceResult:
    """一次推理的完整结果

    Attributes:
        preference: 最终偏好向量（单纯形上）
        exemplars: 提示词中使用的检索示例
        attempts: 实际调用客户端的次数
        fallback: 是否退回了类别默认向量
        error: 最后一次失败的原因
    """
    preference: PreferenceVector
    exemplars: tuple[Exemplar, ...] = ()
    attempts: int = 0
    fallback: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "preference": list(self.preference.as_tuple()),
            "exemplars": [
                {"intent_text": e.intent_text, "score": e.score, "preference": list(e.preference.as_tuple())}
                for e in self.exemplars
            ],
            "attempts": self.attempts,
            "fallback": self.fallback,
            "error": self.error,
        }


@dataclass
class IntentInferencer:
    """带失败计数的推理器

    同一个实例可以被多个线程共享；失败计数器加锁更新。

    Example:
        inferencer = IntentInferencer(store, MockLLMClient())
        result = inferencer.infer(request)
        result.preference
    """
    store: "MemoryStore"
    client: LLMClient
    k: int = DEFAULT_K
    class_defaults: Mapping[QoEClassId, PreferenceVector] = field(default_factory=lambda: dict(CLASS_DEFAULTS))
    embedder: Embedder | None = None
    failures: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def infer(self, request: SliceRequest) -> InferenceResult:
        exemplars: tuple[Exemplar, ...] = ()
        text = request.intent_text.strip()

        if text:
            try:
                query = embed(text, self.embedder)
                hits = retrieve_topk(self.store, query, self.k)
                exemplars = tuple(Exemplar(e.intent_text, e.preference, score) for e, score in hits)
            except ValueError as e:
                # 没有可用词时退化为零样本提示
                logger.debug("意图 %r 无法嵌入: %s", text, e)

        prompt = build_prompt(text, exemplars)

        error: str | None = None
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                raw = self.client.complete(prompt.text)
                preference = parse_preference(raw)
                return InferenceResult(preference, exemplars, attempts=attempt)
            except PreferenceParseError as e:
                error = str(e)
                logger.debug("第 %d 次解析失败: %s", attempt, e)
            except Exception as e:
                error = f"{type(e).__name__}: {e}"
                logger.warning("LLM 客户端调用失败 (第 %d 次): %s", attempt, error)

        with self._lock:
            self.failures += 1
        logger.warning("意图推理失败，使用 %s 默认偏好: %s", request.qoe_class.class_id.value, error)
        return InferenceResult(
            self.class_defaults[request.qoe_class.class_id],
            exemplars,
            attempts=MAX_ATTEMPTS,
            fallback=True,
            error=error,
        )


def infer_preferences(
    request: SliceRequest,
    store: "MemoryStore",
    llm_client: LLMClient,
    k: int = DEFAULT_K,
) -> PreferenceVector:
    """推理单个请求的偏好向量（无状态便捷入口）"""
    return IntentInferencer(store, llm_client, k=k).infer(request).preference
