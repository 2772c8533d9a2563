"""LLM 客户端

MockLLMClient 是默认实现：只看提示词中最后一个 "Intent:" 行，按关键词表返回权重文本，
结果完全确定。RemoteLLMClient 把提示词 POST 到环境变量配置的端点，
响应体原样交给 parse_preference。

Example:
    client = MockLLMClient()
    client.complete(prompt.text)          # "[0.3, 0.5, 0.2]"

    client = RemoteLLMClient(RemoteClientConfig.from_env())
"""
from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from models import ConfigurationError

logger = logging.getLogger(__name__)


class LLMClient(Protocol):
    def complete(self, prompt: str) -> str:
        ...


# 按顺序扫描，首个命中生效
MOCK_KEYWORD_TABLE: tuple[tuple[tuple[str, ...], str], ...] = (
    (("safety", "control"), "[0.3, 0.5, 0.2]"),
    (("latency", "real-time"), "[0.55, 0.30, 0.15]"),
    (("budget", "cost"), "[0.2, 0.2, 0.6]"),
    (("video", "monitoring"), "[0.4, 0.2, 0.4]"),
)
MOCK_DEFAULT = "[0.34, 0.33, 0.33]"

_QUERY_RE = re.compile(r"^Intent: (.*)$", re.MULTILINE)


def _keyword_hit(text: str, keyword: str) -> bool:
    return re.search(r"\b" + re.escape(keyword) + r"\b", text) is not None


class MockLLMClient:
    """确定性的关键词表客户端"""

    def __init__(self):
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        queries = _QUERY_RE.findall(prompt)
        query = (queries[-1] if queries else prompt).casefold()

        for keywords, answer in MOCK_KEYWORD_TABLE:
            if any(_keyword_hit(query, kw) for kw in keywords):
                return answer
        return MOCK_DEFAULT


@dataclass
class RemoteClientConfig:
    """远程 LLM 端点配置

    Example:
        config = RemoteClientConfig.from_env()
        config = RemoteClientConfig(endpoint="http://edge-llm:9000/infer", api_key="sk-xxx")
    """
    endpoint: str
    api_key: str
    timeout: float = field(default_factory=lambda: float(os.getenv("SLICING_LLM_TIMEOUT", "10")))

    @classmethod
    def from_env(cls) -> "RemoteClientConfig":
        """从环境变量 SLICING_LLM_ENDPOINT / SLICING_LLM_API_KEY 创建配置"""
        endpoint = os.getenv("SLICING_LLM_ENDPOINT")
        api_key = os.getenv("SLICING_LLM_API_KEY")

        missing = [
            name for name, value in (
                ("SLICING_LLM_ENDPOINT", endpoint),
                ("SLICING_LLM_API_KEY", api_key),
            )
            if not value
        ]
        if missing:
            raise ConfigurationError(f"远程 LLM 客户端缺少环境变量: {', '.join(missing)}")

        return cls(endpoint=endpoint, api_key=api_key)


class RemoteLLMClient:
    """HTTP 适配器：{"prompt": ...} -> 响应体文本"""

    def __init__(self, config: RemoteClientConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(
            timeout=config.timeout,
            headers={"Authorization": f"Bearer {config.api_key}"},
            transport=transport,
        )

    def complete(self, prompt: str) -> str:
        response = self._client.post(self.config.endpoint, json={"prompt": prompt})
        response.raise_for_status()
        return response.text

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteLLMClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def make_client(kind: str) -> LLMClient:
    """按名称创建客户端（mock | remote）"""
    if kind == "mock":
        return MockLLMClient()
    if kind == "remote":
        return RemoteLLMClient(RemoteClientConfig.from_env())
    raise ConfigurationError(f"未知的 LLM 客户端: {kind}（支持 mock, remote）")
