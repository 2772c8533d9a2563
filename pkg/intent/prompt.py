"""少样本提示词构建

模板固定，同样的输入总是得到同样的字节：

    You assign QoE preference weights (latency, reliability, economics) summing to 1 for network slice requests.

    Example:
    Intent: <text>
    Weights: [w1, w2, w3]

    Intent: <query>
    Weights:
"""
from __future__ import annotations

from typing import Iterable

from models import Exemplar, IntentEntry, Prompt

PREAMBLE = (
    "You assign QoE preference weights (latency, reliability, economics) "
    "summing to 1 for network slice requests."
)


def format_weights(weights: Iterable[float]) -> str:
    return "[" + ", ".join(f"{w:.3f}" for w in weights) + "]"


def render_exemplar(exemplar: Exemplar) -> str:
    return (
        "Example:\n"
        f"Intent: {exemplar.intent_text}\n"
        f"Weights: {format_weights(exemplar.preference.as_tuple())}"
    )


def build_prompt(
    query_text: str,
    exemplars: Iterable[Exemplar | tuple[IntentEntry, float]] = (),
) -> Prompt:
    """把检索结果和查询意图拼成提示词

    Args:
        query_text: 当前请求的意图文本
        exemplars: retrieve_topk 的输出（保持检索顺序），或已转换的 Exemplar
    """
    shots = tuple(
        item if isinstance(item, Exemplar)
        else Exemplar(item[0].intent_text, item[0].preference, float(item[1]))
        for item in exemplars
    )
    blocks = [PREAMBLE]
    blocks.extend(render_exemplar(e) for e in shots)
    blocks.append(f"Intent: {query_text}\nWeights:")

    return Prompt(
        preamble=PREAMBLE,
        exemplars=shots,
        query=query_text,
        text="\n\n".join(blocks),
    )
