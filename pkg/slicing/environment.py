"""切片编排环境

确定性、可复现的顺序决策环境：CU 本地服务器（40 CPU / 30 内存）、无限容量的云端、
VNF 节点池，以及切片生命周期（请求 -> 部署 -> 释放）。

所有操作返回新的 NetworkState，调用方持有的旧状态保持不变。
"""
from __future__ import annotations

import logging
from itertools import combinations

import numpy as np

import qoe
from models import (
    INFEASIBLE_ACTION,
    Container,
    ContractViolationError,
    DeploymentAction,
    DeploymentMode,
    DeploymentOutcome,
    DeploymentRecord,
    NetworkState,
    NodeHost,
    SliceNotFoundError,
    SliceRequest,
    Violation,
    VnfNode,
)

from .config import EnvConfig

logger = logging.getLogger(__name__)


def reset(config: EnvConfig | None = None, seed: int = 0) -> NetworkState:
    """初始化环境

    节点时延与部署费用在各自范围内均匀抽取整数；前 round(pool_size * local_fraction)
    个节点属于本地，其余属于云端。
    """
    config = (config or EnvConfig()).ensure_valid()
    rng = np.random.default_rng(seed)

    delays = rng.integers(config.node_delay_range[0], config.node_delay_range[1] + 1, size=config.pool_size)
    costs = rng.integers(config.node_cost_range[0], config.node_cost_range[1] + 1, size=config.pool_size)

    nodes = [
        VnfNode(
            node_id=i,
            host=NodeHost.LOCAL if i < config.n_local else NodeHost.CLOUD,
            node_delay=float(delays[i]),
            deploy_cost=float(costs[i]),
        )
        for i in range(config.pool_size)
    ]
    return NetworkState(
        config=config,
        local_cpu_free=config.local_cpu,
        local_mem_free=config.local_mem,
        nodes=nodes,
    )


def eligible_nodes(state: NetworkState, request: SliceRequest, host: NodeHost) -> list[int]:
    """指定宿主上租户数尚未达到请求等级 max_share 的节点"""
    max_share = request.qoe_class.max_share
    return [n.node_id for n in state.nodes if n.host is host and len(n.tenants) < max_share]


def vertical_candidates(state: NetworkState, request: SliceRequest) -> list[Container]:
    """余量能容纳该请求的容器（按 container_id 排序）"""
    result = []
    for container in sorted(state.containers, key=lambda c: c.container_id):
        cpu_slack, mem_slack = state.container_slack(container)
        if cpu_slack >= request.cpu and mem_slack >= request.mem:
            result.append(container)
    return result


def best_vertical_container(state: NetworkState, request: SliceRequest) -> Container | None:
    """纵向扩展的目标容器：余量（cpu + 内存）最大者，平局取编号最小"""
    candidates = vertical_candidates(state, request)
    if not candidates:
        return None

    def slack_rank(c: Container) -> tuple[int, int]:
        cpu_slack, mem_slack = state.container_slack(c)
        return (-(cpu_slack + mem_slack), c.container_id)

    return min(candidates, key=slack_rank)


def horizontal_ok(state: NetworkState, request: SliceRequest) -> bool:
    return state.local_cpu_free >= request.cpu and state.local_mem_free >= request.mem


def feasible_actions(state: NetworkState, request: SliceRequest) -> list[DeploymentAction]:
    """枚举全部资源可行的动作

    节点组合按节点编号升序给出；返回空列表时由调用方记录 Infeasible。
    """
    if request.id in state.active_slices:
        raise ContractViolationError(f"切片已部署: {request.id}")

    k = request.chain_length
    local_combos = list(combinations(eligible_nodes(state, request, NodeHost.LOCAL), k))
    cloud_combos = list(combinations(eligible_nodes(state, request, NodeHost.CLOUD), k))

    actions = []
    for container in vertical_candidates(state, request):
        actions.extend(
            DeploymentAction(DeploymentMode.VERTICAL_LOCAL, combo, container.container_id)
            for combo in local_combos
        )
    if horizontal_ok(state, request):
        actions.extend(DeploymentAction(DeploymentMode.HORIZONTAL_LOCAL, combo) for combo in local_combos)
    actions.extend(DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, combo) for combo in cloud_combos)
    return actions


def _check_feasible(state: NetworkState, request: SliceRequest, action: DeploymentAction) -> None:
    if request.id in state.active_slices:
        raise ContractViolationError(f"切片已部署: {request.id}")

    ids = action.node_ids
    if len(ids) != request.chain_length or len(set(ids)) != len(ids):
        raise ContractViolationError(
            f"{request.id}: 需要 {request.chain_length} 个不同节点，实际 {list(ids)}"
        )

    host = action.mode.host
    for i in ids:
        if not 0 <= i < len(state.nodes):
            raise ContractViolationError(f"{request.id}: 节点不存在 {i}")
        node = state.nodes[i]
        if node.host is not host:
            raise ContractViolationError(f"{request.id}: {action.mode.value} 不能使用 {node.host.value} 节点 {i}")
        if len(node.tenants) >= request.qoe_class.max_share:
            raise ContractViolationError(f"{request.id}: 节点 {i} 已达共享上限")

    if action.mode is DeploymentMode.VERTICAL_LOCAL:
        container = state.container(action.target_container) if action.target_container is not None else None
        if container is None:
            raise ContractViolationError(f"{request.id}: 纵向扩展缺少有效的 target_container")
        cpu_slack, mem_slack = state.container_slack(container)
        if cpu_slack < request.cpu or mem_slack < request.mem:
            raise ContractViolationError(f"{request.id}: 容器 {container.container_id} 余量不足")
    elif action.mode is DeploymentMode.HORIZONTAL_LOCAL:
        if not horizontal_ok(state, request):
            raise ContractViolationError(f"{request.id}: 本地资源不足，无法新建容器")


def infeasible_outcome(request: SliceRequest, config: EnvConfig) -> DeploymentOutcome:
    metrics = qoe.sentinel_metrics(request, config)
    return DeploymentOutcome(
        slice_id=request.id,
        class_id=request.qoe_class.class_id,
        latency=metrics.latency,
        econ_cost=metrics.econ_cost,
        reliability_cost=int(metrics.reliability_cost),
        violations=(Violation.INFEASIBLE,),
    )


def apply(
    state: NetworkState,
    request: SliceRequest,
    action: DeploymentAction,
) -> tuple[NetworkState, DeploymentOutcome]:
    """执行部署动作，返回 (新状态, 部署结果)"""
    new_state = state.clone()
    new_state.step_index += 1

    if action.is_infeasible:
        return new_state, infeasible_outcome(request, state.config)

    _check_feasible(state, request, action)

    latency = qoe.latency_ms(action, state)
    cost = qoe.econ_cost(action, state)

    container_id: int | None = None
    if action.mode is DeploymentMode.HORIZONTAL_LOCAL:
        container_id = new_state.next_container_id
        new_state.next_container_id += 1
        new_state.containers.append(
            Container(container_id, request.cpu, request.mem, [request.id])
        )
        new_state.local_cpu_free -= request.cpu
        new_state.local_mem_free -= request.mem
    elif action.mode is DeploymentMode.VERTICAL_LOCAL:
        container_id = action.target_container
        container = new_state.container(container_id)
        container.cpu_alloc += request.cpu
        container.mem_alloc += request.mem
        container.resident_slices.append(request.id)
        new_state.local_cpu_free -= request.cpu
        new_state.local_mem_free -= request.mem

    for i in action.node_ids:
        node = new_state.nodes[i]
        node.deployed = True
        node.tenants.add(request.id)

    new_state.active_slices[request.id] = DeploymentRecord(
        request=request,
        action=action,
        container_id=container_id,
        deployed_at=state.step_index,
    )

    reliability = qoe.reliability_cost(new_state, request.id)
    metrics = qoe.compute_metrics(latency, cost, reliability, request.chain_length, state.config)
    violations = qoe.check_constraints(metrics, new_state, request)

    outcome = DeploymentOutcome(
        slice_id=request.id,
        class_id=request.qoe_class.class_id,
        latency=latency,
        econ_cost=cost,
        reliability_cost=reliability,
        violations=tuple(violations),
    )
    return new_state, outcome


def release(state: NetworkState, slice_id: str) -> NetworkState:
    """释放切片：从节点租户中移除、收缩或删除容器、归还本地资源

    节点租户清空后保持 deployed（warm），可被再次复用。
    """
    record = state.active_slices.get(slice_id)
    if record is None:
        raise SliceNotFoundError(slice_id)

    new_state = state.clone()
    del new_state.active_slices[slice_id]

    for i in record.action.node_ids:
        new_state.nodes[i].tenants.discard(slice_id)

    if record.container_id is not None:
        container = new_state.container(record.container_id)
        container.cpu_alloc -= record.request.cpu
        container.mem_alloc -= record.request.mem
        container.resident_slices.remove(slice_id)
        if not container.resident_slices:
            new_state.containers.remove(container)
        new_state.local_cpu_free += record.request.cpu
        new_state.local_mem_free += record.request.mem

    return new_state


def release_all(state: NetworkState) -> NetworkState:
    """回合结束时批量释放所有在役切片"""
    for slice_id in sorted(state.active_slices):
        state = release(state, slice_id)
    return state


def reconfigure(
    state: NetworkState,
    slice_id: str,
    updated_request: SliceRequest,
    action: DeploymentAction,
) -> tuple[NetworkState, DeploymentOutcome]:
    """动态调整：释放旧部署后以更新后的请求重新部署

    action 必须在释放后的状态上可行（或为 Infeasible 哨兵）。
    """
    if updated_request.id != slice_id:
        raise ValueError(f"更新后的请求 ID 不一致: {updated_request.id} != {slice_id}")
    released = release(state, slice_id)
    logger.debug("重新部署切片 %s -> %s", slice_id, action.mode.value)
    return apply(released, updated_request, action)


