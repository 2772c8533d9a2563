"""QoE 成本模型

时延 = 容器启动（仅横向扩展）+ 链上节点时延之和 + 云卸载附加时延（仅云卸载）；
经济成本 = 服务器费用 + 首次部署节点的部署费用；
可靠性成本 = 切片自身节点中被共享（租户数 >= 2）的数量。

三项指标按 EnvConfig 中的归一化常量缩放到同一量级后按偏好向量加权。
所有函数都是纯函数。
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Iterable, Sequence

from models import (
    DeploymentAction,
    DeploymentMode,
    DeploymentOutcome,
    NetworkState,
    PreferenceVector,
    QoEMetrics,
    SliceNotFoundError,
    SliceRequest,
    Violation,
)

if TYPE_CHECKING:
    from slicing.config import EnvConfig


def latency_ms(action: DeploymentAction, state: NetworkState) -> float:
    """部署时延（ms）"""
    config = state.config
    latency = sum(state.nodes[i].node_delay for i in action.node_ids)
    if action.mode is DeploymentMode.HORIZONTAL_LOCAL:
        latency += config.boot_delay_ms
    elif action.mode is DeploymentMode.CLOUD_OFFLOAD:
        latency += config.offload_delay_ms
    return float(latency)


def econ_cost(action: DeploymentAction, state: NetworkState) -> float:
    """经济成本：服务器费用 + 尚未部署节点的部署费用

    已部署（包括 warm）节点由后续租户免费共享。
    """
    config = state.config
    fee = config.cloud_server_cost if action.mode is DeploymentMode.CLOUD_OFFLOAD else config.local_server_cost
    fresh = sum(state.nodes[i].deploy_cost for i in action.node_ids if not state.nodes[i].deployed)
    return float(fee + fresh)


def reliability_cost(state_after: NetworkState, slice_id: str) -> int:
    """切片节点中租户数 >= 2 的节点数"""
    record = state_after.active_slices.get(slice_id)
    if record is None:
        raise SliceNotFoundError(slice_id)
    return sum(1 for i in record.action.node_ids if len(state_after.nodes[i].tenants) >= 2)


def compute_metrics(
    latency: float,
    econ: float,
    reliability: float,
    chain_length: int,
    config: EnvConfig,
) -> QoEMetrics:
    return QoEMetrics.from_raw(
        latency,
        econ,
        reliability,
        chain_length,
        latency_normalizer=config.latency_normalizer,
        cost_normalizer=config.cost_normalizer,
    )


def outcome_metrics(outcome: DeploymentOutcome, chain_length: int, config: EnvConfig) -> QoEMetrics:
    """从部署结果恢复归一化指标"""
    return compute_metrics(outcome.latency, outcome.econ_cost, outcome.reliability_cost, chain_length, config)


def sentinel_metrics(request: SliceRequest, config: EnvConfig) -> QoEMetrics:
    """不可行哨兵的指标：时延与成本取等级上限 + 1，所有节点记为共享"""
    return compute_metrics(
        request.qoe_class.latency_bound + 1,
        request.qoe_class.cost_bound + 1,
        request.chain_length,
        request.chain_length,
        config,
    )


def weighted_cost(metrics: QoEMetrics, prefs: PreferenceVector) -> float:
    """J = w_latency * L + w_econ * C + w_reliability * R"""
    prefs.validate()
    return float(
        prefs.w_latency * metrics.latency_hat
        + prefs.w_econ * metrics.cost_hat
        + prefs.w_reliability * metrics.reliability_hat
    )


def check_constraints(
    metrics: QoEMetrics,
    state_after: NetworkState,
    slice: SliceRequest,
) -> list[Violation]:
    """按 Latency, Reliability, Economics 顺序返回违约项"""
    qoe_class = slice.qoe_class
    violations = []

    if metrics.latency > qoe_class.latency_bound:
        violations.append(Violation.LATENCY)

    record = state_after.active_slices.get(slice.id)
    if record is not None and any(
        len(state_after.nodes[i].tenants) > qoe_class.max_share for i in record.action.node_ids
    ):
        violations.append(Violation.RELIABILITY)

    if metrics.econ_cost > qoe_class.cost_bound:
        violations.append(Violation.ECONOMICS)

    return violations


def availability_ratio(outcomes: Sequence[DeploymentOutcome]) -> float:
    """满足全部 QoE 约束的切片比例；空列表约定为 1.0"""
    if not outcomes:
        return 1.0
    return sum(1 for o in outcomes if o.served) / len(outcomes)


def reward(
    metrics: QoEMetrics,
    prefs: PreferenceVector,
    violations: Iterable[Violation],
    penalty: float = 1.0,
) -> float:
    """r = -J - penalty * |violations|"""
    return -weighted_cost(metrics, prefs) - penalty * len(list(violations))


def audit_final(state: NetworkState, outcomes: Sequence[DeploymentOutcome]) -> list[DeploymentOutcome]:
    """回合结束时按最终拓扑重新检查可靠性约束

    后到的切片共享节点可能让先到切片的租户数超过其 max_share。
    """
    audited = []
    for outcome in outcomes:
        record = state.active_slices.get(outcome.slice_id)
        if record is not None:
            max_share = record.request.qoe_class.max_share
            if any(len(state.nodes[i].tenants) > max_share for i in record.action.node_ids):
                outcome = outcome.with_violation(Violation.RELIABILITY)
        audited.append(outcome)
    return audited
