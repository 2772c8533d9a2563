"""状态编码

布局（长度 11 + 4 * pool_size，所有分量在 [0, 1]）：

    [local_cpu_free/40, local_mem_free/30, cpu/6, mem/6, chain_length/3,
     one-hot class (3),
     (node_delay/15, deploy_cost/4, min(tenants/4, 1), is_cloud) * pool_size,
     preference (3)]

分母取自 EnvConfig（本地容量、节点时延/费用上限）以及等级表的需求上限。
普通 PPO 的偏好分量全为 0。
"""
from __future__ import annotations

import numpy as np

from models import CLASS_ORDER, NetworkState, NodeHost, PreferenceVector, SliceRequest

FEATURE_LAYOUT = "cpu,mem,req_cpu,req_mem,chain,class3,node4xP,pref3"
TENANT_SCALE = 4.0


def feature_dim(pool_size: int) -> int:
    return 11 + 4 * pool_size


def _demand_scales(state: NetworkState) -> tuple[float, float, float]:
    classes = state.config.class_table().values()
    cpu = max(c.cpu_demand_range[1] for c in classes)
    mem = max(c.mem_demand_range[1] for c in classes)
    return float(cpu), float(mem), float(state.config.max_chain_length)


def encode_state(
    state: NetworkState,
    request: SliceRequest,
    prefs: PreferenceVector | None = None,
) -> np.ndarray:
    """编码 (网络状态, 当前请求, 偏好) 为定长特征向量"""
    config = state.config
    cpu_scale, mem_scale, chain_scale = _demand_scales(state)

    head = [
        state.local_cpu_free / config.local_cpu,
        state.local_mem_free / config.local_mem,
        request.cpu / cpu_scale,
        request.mem / mem_scale,
        request.chain_length / chain_scale,
    ]
    one_hot = [1.0 if request.qoe_class.class_id is c else 0.0 for c in CLASS_ORDER]

    delay_max = float(config.node_delay_range[1])
    cost_max = float(config.node_cost_range[1])
    node_block = np.array([
        (
            n.node_delay / delay_max,
            n.deploy_cost / cost_max,
            min(len(n.tenants) / TENANT_SCALE, 1.0),
            1.0 if n.host is NodeHost.CLOUD else 0.0,
        )
        for n in state.nodes
    ], dtype=np.float64).ravel()

    pref = prefs.as_array() if prefs is not None else np.zeros(3)

    features = np.concatenate([np.array(head + one_hot), node_block, pref])
    return np.clip(features, 0.0, 1.0)
