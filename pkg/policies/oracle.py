"""穷举搜索基准

对小规模实例枚举全部可行动作序列，返回加权成本（含违约惩罚）最小的一条。
平局按动作规范编码的字典序取最小者。只用于验证，不用于训练。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import qoe
from models import (
    INFEASIBLE_ACTION,
    DeploymentAction,
    DeploymentOutcome,
    NetworkState,
    OracleGuardError,
    PreferenceVector,
    SliceRequest,
)
from slicing import EnvConfig, apply, feasible_actions, reset

logger = logging.getLogger(__name__)

# 保护上限
MAX_REQUESTS = 3
MAX_CHAIN_LENGTH = 2
MAX_POOL_SIZE = 6

Policy = Callable[[NetworkState, SliceRequest], DeploymentAction]


@dataclass
class SequenceResult:
    """一条动作序列的评估结果"""
    actions: list[DeploymentAction]
    outcomes: list[DeploymentOutcome]
    total_cost: float


def step_cost(outcome: DeploymentOutcome, request: SliceRequest, prefs: PreferenceVector, config: EnvConfig) -> float:
    """单步成本 = -reward"""
    metrics = qoe.outcome_metrics(outcome, request.chain_length, config)
    return -qoe.reward(metrics, prefs, outcome.violations, penalty=config.violation_penalty)


def sequence_cost(
    policy: Policy,
    requests: Sequence[SliceRequest],
    prefs_per_request: Sequence[PreferenceVector],
    state: NetworkState,
) -> SequenceResult:
    """按策略依次部署请求并累计成本"""
    actions, outcomes, total = [], [], 0.0
    for request, prefs in zip(requests, prefs_per_request):
        action = policy(state, request)
        state, outcome = apply(state, request, action)
        total += step_cost(outcome, request, prefs, state.config)
        actions.append(action)
        outcomes.append(outcome)
    return SequenceResult(actions, outcomes, total)


def check_guard(config: EnvConfig, requests: Sequence[SliceRequest]) -> None:
    if len(requests) > MAX_REQUESTS:
        raise OracleGuardError(f"请求数 {len(requests)} 超过上限 {MAX_REQUESTS}")
    if config.pool_size > MAX_POOL_SIZE:
        raise OracleGuardError(f"pool_size {config.pool_size} 超过上限 {MAX_POOL_SIZE}")
    for r in requests:
        if r.chain_length > MAX_CHAIN_LENGTH:
            raise OracleGuardError(f"{r.id}: 链长 {r.chain_length} 超过上限 {MAX_CHAIN_LENGTH}")


def brute_force_optimal(
    config: EnvConfig,
    requests: Sequence[SliceRequest],
    prefs_per_request: Sequence[PreferenceVector],
    seed: int = 0,
    initial_state: NetworkState | None = None,
) -> tuple[list[DeploymentAction], float]:
    """穷举最优动作序列

    Returns:
        (动作序列, 总加权成本)
    """
    check_guard(config, requests)
    if len(prefs_per_request) != len(requests):
        raise ValueError("prefs_per_request 与 requests 长度不一致")
    for prefs in prefs_per_request:
        prefs.validate()

    root = initial_state if initial_state is not None else reset(config, seed)
    best_cost = float("inf")
    best_seq: list[DeploymentAction] = []

    def search(state: NetworkState, idx: int, acc: float, seq: list[DeploymentAction]) -> None:
        nonlocal best_cost, best_seq
        if idx == len(requests):
            # 按字典序遍历，只有严格更优才替换
            if acc < best_cost - 1e-12:
                best_cost, best_seq = acc, list(seq)
            return

        request, prefs = requests[idx], prefs_per_request[idx]
        candidates = sorted(feasible_actions(state, request), key=DeploymentAction.key) or [INFEASIBLE_ACTION]
        for action in candidates:
            new_state, outcome = apply(state, request, action)
            seq.append(action)
            search(new_state, idx + 1, acc + step_cost(outcome, request, prefs, config), seq)
            seq.pop()

    search(root, 0, 0.0, [])
    logger.debug("穷举完成: %d 个请求, 最优成本 %.4f", len(requests), best_cost)
    return best_seq, best_cost
