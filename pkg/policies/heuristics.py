"""启发式基线策略

两者都忽略偏好向量，只是 (state, request) 的纯函数。平局一律按 node_id 升序打破。
"""
from __future__ import annotations

from models import (
    INFEASIBLE_ACTION,
    DeploymentAction,
    DeploymentMode,
    NetworkState,
    NodeHost,
    SliceRequest,
)
from slicing import best_vertical_container, eligible_nodes
from slicing.environment import horizontal_ok


def _lowest_delay(state: NetworkState, request: SliceRequest, host: NodeHost) -> tuple[int, ...] | None:
    ids = sorted(eligible_nodes(state, request, host), key=lambda i: (state.nodes[i].node_delay, i))
    if len(ids) < request.chain_length:
        return None
    return tuple(ids[: request.chain_length])


def local_first(state: NetworkState, request: SliceRequest) -> DeploymentAction:
    """本地优先：纵向扩展余量最大的容器 > 新建容器 > 云卸载

    节点选择时延最低的可用节点。
    """
    local_nodes = _lowest_delay(state, request, NodeHost.LOCAL)
    if local_nodes is not None:
        target = best_vertical_container(state, request)
        if target is not None:
            return DeploymentAction(DeploymentMode.VERTICAL_LOCAL, local_nodes, target.container_id)
        if horizontal_ok(state, request):
            return DeploymentAction(DeploymentMode.HORIZONTAL_LOCAL, local_nodes)

    cloud_nodes = _lowest_delay(state, request, NodeHost.CLOUD)
    if cloud_nodes is not None:
        return DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, cloud_nodes)
    return INFEASIBLE_ACTION


def cloud_only(state: NetworkState, request: SliceRequest) -> DeploymentAction:
    """仅云端：优先复用已部署且仍有共享余量的节点，其次部署费用最低的节点"""
    ids = sorted(
        eligible_nodes(state, request, NodeHost.CLOUD),
        key=lambda i: (not state.nodes[i].deployed, state.nodes[i].deploy_cost, i),
    )
    if len(ids) < request.chain_length:
        return INFEASIBLE_ACTION
    return DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, tuple(ids[: request.chain_length]))
