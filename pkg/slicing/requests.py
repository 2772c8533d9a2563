"""切片请求生成

按 class_mix 抽取 QoE 等级，在等级范围内均匀抽取 CPU/内存/链长，
intent_text 取自 data/intent_templates.yaml。对固定 (n, seed, class_mix) 完全确定。
"""
from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from models import ConfigurationError, QoEClassId, SliceRequest
from models.slice import CLASS_ORDER

from .config import EnvConfig

logger = logging.getLogger(__name__)

TEMPLATES_PATH = Path(__file__).resolve().parent.parent / "data" / "intent_templates.yaml"


@lru_cache(maxsize=4)
def load_intent_templates(path: str | None = None) -> dict[QoEClassId, tuple[str, ...]]:
    """读取意图模板表，每个等级至少 4 条"""
    template_path = Path(path) if path else TEMPLATES_PATH
    raw = yaml.safe_load(template_path.read_text(encoding="utf-8"))

    templates: dict[QoEClassId, tuple[str, ...]] = {}
    for class_id in CLASS_ORDER:
        items = raw.get(class_id.value) or []
        if len(items) < 4:
            raise ConfigurationError(
                f"{template_path}: {class_id.value} 至少需要 4 条意图模板，实际 {len(items)}"
            )
        templates[class_id] = tuple(str(t) for t in items)
    return templates


def generate_requests(
    n: int,
    seed: int,
    class_mix: Sequence[float] | None = None,
    config: EnvConfig | None = None,
) -> list[SliceRequest]:
    """生成 n 个切片请求

    Args:
        n: 请求数量（>= 0）
        seed: 随机种子
        class_mix: 三个等级的概率（HighPriority, MediumPriority, BestEffort），默认取 config.class_mix
        config: 环境配置，默认 EnvConfig()
    """
    if n < 0:
        raise ValueError(f"请求数量不能为负: {n}")

    config = config or EnvConfig()
    mix = np.asarray(class_mix if class_mix is not None else config.class_mix, dtype=np.float64)
    if mix.shape != (3,) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
        raise ValueError(f"class_mix 必须是三个和为 1 的概率: {mix.tolist()}")

    templates = load_intent_templates()
    table = config.class_table()
    rng = np.random.default_rng(seed)

    requests = []
    for i in range(n):
        class_id = CLASS_ORDER[int(rng.choice(3, p=mix))]
        qoe_class = table[class_id]
        cpu = int(rng.integers(qoe_class.cpu_demand_range[0], qoe_class.cpu_demand_range[1] + 1))
        mem = int(rng.integers(qoe_class.mem_demand_range[0], qoe_class.mem_demand_range[1] + 1))
        chain = int(rng.integers(qoe_class.chain_length_range[0], qoe_class.chain_length_range[1] + 1))
        pool = templates[class_id]
        intent_text = pool[int(rng.integers(len(pool)))]

        requests.append(
            SliceRequest(
                id=f"s{seed}-{i:03d}",
                qoe_class=qoe_class,
                cpu=cpu,
                mem=mem,
                chain_length=chain,
                intent_text=intent_text,
                arrival_index=i,
            )
        )

    logger.debug("生成 %d 个切片请求 (seed=%d)", n, seed)
    return requests


def with_intent(request: SliceRequest, intent_text: str) -> SliceRequest:
    """返回意图文本被更新后的同一请求（动态调整场景）"""
    return SliceRequest(
        id=request.id,
        qoe_class=request.qoe_class,
        cpu=request.cpu,
        mem=request.mem,
        chain_length=request.chain_length,
        intent_text=intent_text,
        arrival_index=request.arrival_index,
    )
