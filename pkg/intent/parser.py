"""LLM 输出解析"""
from __future__ import annotations

import math
import re

from models import PreferenceParseError, PreferenceVector

_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")
_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")

# 和落在这个区间内才重新归一化，否则视为无效输出
SUM_BAND = (0.5, 2.0)


def parse_preference(raw_text: str) -> PreferenceVector:
    """从第一个方括号三元组中取前三个实数作为偏好向量

    负数、不足三个数、或和不在 [0.5, 2.0] 内都会抛出 PreferenceParseError。
    """
    if not isinstance(raw_text, str):
        raise PreferenceParseError(f"LLM 输出不是字符串: {type(raw_text).__name__}")

    text = raw_text.replace("−", "-")
    match = _BRACKET_RE.search(text)
    if match is None:
        raise PreferenceParseError(f"未找到方括号三元组: {raw_text[:80]!r}")

    numbers = _NUMBER_RE.findall(match.group(1))
    if len(numbers) < 3:
        raise PreferenceParseError(f"三元组中的数字不足 3 个: {match.group(0)!r}")

    weights = [float(n) for n in numbers[:3]]
    if any(not math.isfinite(w) for w in weights):
        raise PreferenceParseError(f"权重不是有限数: {weights}")
    if any(w < 0 for w in weights):
        raise PreferenceParseError(f"权重不能为负: {weights}")

    total = sum(weights)
    if not SUM_BAND[0] <= total <= SUM_BAND[1]:
        raise PreferenceParseError(f"权重之和 {total:.4f} 不在 {SUM_BAND} 内")

    return PreferenceVector(*(w / total for w in weights))
