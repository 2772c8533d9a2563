"""单回合编排运行

按到达顺序把请求交给策略，累计奖励，可选地在每次到达后触发意图变更
（已部署切片被更新意图并重新部署），回合结束后做最终审计。
启发式、穷举基准和学习到的策略都走这里，保证评估口径一致。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol, Sequence

import numpy as np

import qoe
from models import (
    CLASS_ORDER,
    DeploymentAction,
    DeploymentOutcome,
    NetworkState,
    PreferenceVector,
    QoEClassId,
    QoEMetrics,
    SliceRequest,
)

from .config import EnvConfig
from .environment import apply, reconfigure, release, release_all, reset
from .requests import load_intent_templates, with_intent

logger = logging.getLogger(__name__)

EpisodePolicy = Callable[[NetworkState, SliceRequest, PreferenceVector], DeploymentAction]


class InferredPrefs(Protocol):
    """带兜底标记的偏好（intent.InferenceResult 满足此协议）"""

    @property
    def preference(self) -> PreferenceVector: ...

    @property
    def fallback(self) -> bool: ...


PrefsSource = Callable[[SliceRequest], PreferenceVector | InferredPrefs]
OutcomeCallback = Callable[[SliceRequest, PreferenceVector, DeploymentOutcome, QoEMetrics], None]


def resolve_prefs(value: PreferenceVector | InferredPrefs) -> tuple[PreferenceVector, bool]:
    """拆成 (偏好向量, 是否兜底)"""
    if isinstance(value, PreferenceVector):
        return value, False
    return value.preference, bool(value.fallback)


def mark_fallback(outcome: DeploymentOutcome, fallback: bool) -> DeploymentOutcome:
    return replace(outcome, fallback=True) if fallback and not outcome.fallback else outcome


@dataclass
class EpisodeResult:
    """一个回合的结果

    outcomes 已经过最终审计，按请求到达顺序排列；被重新部署的切片只保留最新结果。
    """
    seed: int
    requests: list[SliceRequest]
    outcomes: list[DeploymentOutcome]
    rewards: list[float]
    reconfigurations: int = 0
    metrics: list[QoEMetrics] = field(default_factory=list)
    final_state: NetworkState | None = field(default=None, repr=False)   # 批量释放之后

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    @property
    def availability(self) -> float:
        return qoe.availability_ratio(self.outcomes)

    def class_outcomes(self) -> dict[QoEClassId, list[DeploymentOutcome]]:
        table: dict[QoEClassId, list[DeploymentOutcome]] = {c: [] for c in CLASS_ORDER}
        for outcome in self.outcomes:
            table[outcome.class_id].append(outcome)
        return table


def run_episode(
    config: EnvConfig,
    requests: Sequence[SliceRequest],
    policy: EpisodePolicy,
    prefs_source: PrefsSource,
    seed: int = 0,
    intent_change_prob: float = 0.0,
    on_outcome: OutcomeCallback | None = None,
) -> EpisodeResult:
    """运行一个回合

    Args:
        config: 环境配置
        requests: 按到达顺序排列的请求
        policy: (state, request, prefs) -> action
        prefs_source: 请求 -> 偏好向量或推断结果（奖励与 QAPPO 特征共用）；
            推断退回类别默认值时，该切片的部署结果带 fallback 标记
        seed: 环境种子；意图变更事件的随机数也由它派生
        intent_change_prob: 每次到达后触发一次意图变更的概率
        on_outcome: 每个部署结果的回调
    """
    if not 0.0 <= intent_change_prob <= 1.0:
        raise ValueError(f"intent_change_prob 必须在 [0, 1]: {intent_change_prob}")

    state = reset(config, seed=seed)
    event_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))

    order: list[str] = []
    current: dict[str, SliceRequest] = {}
    outcomes: dict[str, DeploymentOutcome] = {}
    metrics: dict[str, QoEMetrics] = {}
    rewards: list[float] = []
    reconfigurations = 0

    def decide(st: NetworkState, request: SliceRequest, prefs: PreferenceVector, fallback: bool,
               action: DeploymentAction, redeploy: bool) -> NetworkState:
        if redeploy:
            st, outcome = reconfigure(st, request.id, request, action)
        else:
            st, outcome = apply(st, request, action)
        outcome = mark_fallback(outcome, fallback)
        m = qoe.outcome_metrics(outcome, request.chain_length, config)
        rewards.append(qoe.reward(m, prefs, outcome.violations, penalty=config.violation_penalty))
        outcomes[request.id] = outcome
        metrics[request.id] = m
        current[request.id] = request
        if on_outcome is not None:
            on_outcome(request, prefs, outcome, m)
        return st

    for request in requests:
        prefs, fallback = resolve_prefs(prefs_source(request))
        action = policy(state, request, prefs)
        state = decide(state, request, prefs, fallback, action, redeploy=False)
        order.append(request.id)

        if intent_change_prob > 0 and event_rng.random() < intent_change_prob:
            active = sorted(sid for sid in state.active_slices if sid != request.id)
            if active:
                target = current[active[int(event_rng.integers(len(active)))]]
                updated = with_intent(target, _next_intent(target, event_rng))
                new_prefs, new_fallback = resolve_prefs(prefs_source(updated))
                released = release(state, target.id)
                action = policy(released, updated, new_prefs)
                state = decide(state, updated, new_prefs, new_fallback, action, redeploy=True)
                reconfigurations += 1
                logger.debug("意图变更: %s -> %r", target.id, updated.intent_text)

    audited = qoe.audit_final(state, [outcomes[sid] for sid in order])
    state = release_all(state)

    return EpisodeResult(
        seed=seed,
        requests=[current[sid] for sid in order],
        outcomes=audited,
        rewards=rewards,
        reconfigurations=reconfigurations,
        metrics=[metrics[sid] for sid in order],
        final_state=state,
    )


def _next_intent(request: SliceRequest, rng: np.random.Generator) -> str:
    """同等级模板中换一条不同的意图"""
    pool = [t for t in load_intent_templates()[request.qoe_class.class_id] if t != request.intent_text]
    if not pool:
        return request.intent_text
    return pool[int(rng.integers(len(pool)))]
