"""意图文本嵌入

默认实现是特征哈希词袋：大小写折叠、去标点后的词用 md5 散列到 D=256 个桶，
计数开平方后做 L2 归一化。哈希函数固定，跨进程结果一致。
需要神经编码器时实现 Embedder 协议即可替换。
"""
from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from typing import Protocol

import numpy as np

EMBED_DIM = 256

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray:
        ...


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


@lru_cache(maxsize=65536)
def bucket(token: str, dim: int = EMBED_DIM) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % dim


class HashingEmbedder:
    """特征哈希词袋嵌入"""

    def __init__(self, dim: int = EMBED_DIM):
        if dim < 1:
            raise ValueError(f"嵌入维度必须 >= 1: {dim}")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("意图文本为空")
        tokens = tokenize(text)
        if not tokens:
            raise ValueError(f"意图文本不含有效词: {text!r}")

        counts = np.bincount([bucket(t, self.dim) for t in tokens], minlength=self.dim).astype(np.float64)
        vec = np.sqrt(counts)
        return vec / np.linalg.norm(vec)


DEFAULT_EMBEDDER = HashingEmbedder()


def embed(text: str, embedder: Embedder | None = None) -> np.ndarray:
    """计算单位长度的嵌入向量"""
    return (embedder or DEFAULT_EMBEDDER).embed(text)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)
