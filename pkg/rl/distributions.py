"""掩码分解动作分布

复合动作 = 部署模式（3 选 1）+ chain_length 个节点。节点按编号升序依次抽取：
每一步屏蔽不属于该模式宿主、已达共享上限、编号不大于上一次选择、
以及会导致后续候选不足的节点。这样每个节点集合只有唯一的抽取路径，
log_prob 就是该集合的对数概率。

对数概率对 logits 的梯度在支撑集上是 onehot - p，熵的梯度是 -p * (log p + H)。
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from models import (
    DeploymentAction,
    DeploymentMode,
    NetworkState,
    NodeHost,
    SliceRequest,
)
from slicing import best_vertical_container, eligible_nodes
from slicing.environment import horizontal_ok

MODE_HEADS: tuple[DeploymentMode, ...] = (
    DeploymentMode.VERTICAL_LOCAL,
    DeploymentMode.HORIZONTAL_LOCAL,
    DeploymentMode.CLOUD_OFFLOAD,
)
N_MODES = len(MODE_HEADS)


@dataclass(frozen=True)
class ActionMask:
    """单个决策点的可行性掩码"""
    modes: np.ndarray              # (3,) bool
    nodes: np.ndarray              # (3, pool_size) bool，宿主与共享上限
    chain_length: int
    target_container: int | None   # 纵向扩展的目标容器

    @property
    def any_feasible(self) -> bool:
        return bool(self.modes.any())


@dataclass(frozen=True)
class ActionEncoding:
    """复合动作编码：模式下标 + 升序节点编号"""
    mode: int
    nodes: tuple[int, ...]

    def to_action(self, mask: ActionMask) -> DeploymentAction:
        mode = MODE_HEADS[self.mode]
        target = mask.target_container if mode is DeploymentMode.VERTICAL_LOCAL else None
        return DeploymentAction(mode, tuple(self.nodes), target)


def build_mask(state: NetworkState, request: SliceRequest) -> ActionMask:
    pool = len(state.nodes)
    k = request.chain_length
    local = eligible_nodes(state, request, NodeHost.LOCAL)
    cloud = eligible_nodes(state, request, NodeHost.CLOUD)

    nodes = np.zeros((N_MODES, pool), dtype=bool)
    nodes[0, local] = True
    nodes[1, local] = True
    nodes[2, cloud] = True

    target = best_vertical_container(state, request)
    modes = np.array([
        target is not None and len(local) >= k,
        horizontal_ok(state, request) and len(local) >= k,
        len(cloud) >= k,
    ])
    return ActionMask(
        modes=modes,
        nodes=nodes,
        chain_length=k,
        target_container=target.container_id if target is not None else None,
    )


# ============================================================
# 掩码 softmax
# ============================================================

def masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """逐行 log softmax；被屏蔽的位置为 -inf，全屏蔽的行全为 -inf"""
    z = np.where(mask, logits, -np.inf)
    zmax = np.max(z, axis=-1, keepdims=True)
    zmax = np.where(np.isfinite(zmax), zmax, 0.0)
    shifted = z - zmax
    total = np.sum(np.where(mask, np.exp(shifted), 0.0), axis=-1, keepdims=True)
    total = np.where(total > 0, total, 1.0)
    return np.where(mask, shifted - np.log(total), -np.inf)


def _entropy(logp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """返回 (每行熵, 熵对 logits 的梯度)"""
    finite = np.isfinite(logp)
    p = np.where(finite, np.exp(np.where(finite, logp, 0.0)), 0.0)
    plogp = np.where(finite, p * np.where(finite, logp, 0.0), 0.0)
    h = -plogp.sum(axis=-1)
    grad = np.where(finite, -p * (np.where(finite, logp, 0.0) + h[..., None]), 0.0)
    return h, grad


def node_step_mask(base: np.ndarray, prev: np.ndarray, remaining: np.ndarray) -> np.ndarray:
    """第 j 步节点掩码

    Args:
        base: (B, P) 模式允许的节点
        prev: (B,) 上一步选中的节点编号，第一步为 -1
        remaining: (B,) 本步之后还需要选择的节点数
    """
    pool = base.shape[-1]
    ids = np.arange(pool)
    # 编号大于 i 的可用节点数
    after = np.flip(np.cumsum(np.flip(base, axis=-1), axis=-1), axis=-1) - base
    return base & (ids[None, :] > prev[:, None]) & (after >= remaining[:, None])


# ============================================================
# 批量评估
# ============================================================

@dataclass
class FactorEval:
    """批量动作的对数概率、熵及其对 logits 的梯度"""
    log_prob: np.ndarray        # (B,)
    entropy: np.ndarray         # (B,)
    dlogp_mode: np.ndarray      # (B, 3)
    dlogp_node: np.ndarray      # (B, P)
    dent_mode: np.ndarray       # (B, 3)
    dent_node: np.ndarray       # (B, P)


def evaluate_actions(
    mode_logits: np.ndarray,
    node_logits: np.ndarray,
    mode_mask: np.ndarray,
    node_mask: np.ndarray,
    chain_length: np.ndarray,
    modes: np.ndarray,
    picks: np.ndarray,
) -> FactorEval:
    """计算一批已采样动作在当前参数下的分布量

    Args:
        mode_logits: (B, 3)
        node_logits: (B, P)
        mode_mask: (B, 3) bool
        node_mask: (B, 3, P) bool
        chain_length: (B,) int
        modes: (B,) 选中的模式下标
        picks: (B, C) 升序节点编号，不足 C 个的位置填 -1
    """
    batch = mode_logits.shape[0]
    rows = np.arange(batch)

    # 模式
    logp_m = masked_log_softmax(mode_logits, mode_mask)
    log_prob = logp_m[rows, modes].copy()
    ent_m, dent_mode = _entropy(logp_m)
    entropy = ent_m.copy()
    p_m = np.where(np.isfinite(logp_m), np.exp(np.where(np.isfinite(logp_m), logp_m, 0.0)), 0.0)
    dlogp_mode = -p_m
    dlogp_mode[rows, modes] += 1.0

    # 节点
    base = node_mask[rows, modes]
    dlogp_node = np.zeros_like(node_logits, dtype=np.float64)
    dent_node = np.zeros_like(node_logits, dtype=np.float64)
    prev = np.full(batch, -1)
    for j in range(picks.shape[1]):
        active = j < chain_length
        if not active.any():
            break
        remaining = np.maximum(chain_length - j - 1, 0)
        step_mask = node_step_mask(base, prev, remaining) & active[:, None]
        logp_n = masked_log_softmax(node_logits, step_mask)
        chosen = np.where(active, picks[:, j], 0)

        log_prob += np.where(active, logp_n[rows, chosen], 0.0)
        ent_n, g_ent = _entropy(logp_n)
        entropy += np.where(active, ent_n, 0.0)
        dent_node += g_ent

        p_n = np.where(np.isfinite(logp_n), np.exp(np.where(np.isfinite(logp_n), logp_n, 0.0)), 0.0)
        g = -p_n
        g[rows, chosen] += active
        dlogp_node += g

        prev = np.where(active, picks[:, j], prev)

    return FactorEval(log_prob, entropy, dlogp_mode, dlogp_node, dent_mode, dent_node)


# ============================================================
# 采样
# ============================================================

def _choose(logp: np.ndarray, rng: np.random.Generator | None, greedy: bool) -> int:
    if greedy or rng is None:
        return int(np.argmax(logp))
    p = np.where(np.isfinite(logp), np.exp(np.where(np.isfinite(logp), logp, 0.0)), 0.0)
    return int(rng.choice(len(p), p=p / p.sum()))


def sample_action(
    mode_logits: np.ndarray,
    node_logits: np.ndarray,
    mask: ActionMask,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
) -> tuple[ActionEncoding | None, float]:
    """按因子依次采样（greedy 时每个因子取 argmax）

    没有可行模式时返回 (None, nan)，调用方改用 Infeasible 哨兵。
    """
    if not mask.any_feasible:
        return None, float("nan")

    logp_m = masked_log_softmax(mode_logits[None, :], mask.modes[None, :])[0]
    mode = _choose(logp_m, rng, greedy)
    log_prob = float(logp_m[mode])

    base = mask.nodes[mode][None, :]
    prev = -1
    picks = []
    for j in range(mask.chain_length):
        step_mask = node_step_mask(base, np.array([prev]), np.array([mask.chain_length - j - 1]))
        logp_n = masked_log_softmax(node_logits[None, :], step_mask)[0]
        node = _choose(logp_n, rng, greedy)
        log_prob += float(logp_n[node])
        picks.append(node)
        prev = node

    return ActionEncoding(mode, tuple(picks)), log_prob
