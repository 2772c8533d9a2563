"""策略参数与动作选择

actor 输出 3 + pool_size 个 logits（模式头 + 节点头），critic 输出一个状态价值。
两个网络互不共享参数。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from models import (
    INFEASIBLE_ACTION,
    DeploymentAction,
    NetworkState,
    PreferenceVector,
    SliceRequest,
)

from .config import Variant
from .distributions import N_MODES, ActionEncoding, ActionMask, build_mask, sample_action
from .features import encode_state, feature_dim
from .mlp import MLP

PARAMS_VERSION = 1


@dataclass
class PolicyParams:
    """actor / critic 参数"""
    actor: MLP
    critic: MLP
    pool_size: int
    variant: Variant = Variant.QAPPO
    seed: int = 0
    version: int = PARAMS_VERSION

    @property
    def feature_dim(self) -> int:
        return feature_dim(self.pool_size)

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.actor.copy(), self.critic.copy(), self.pool_size, self.variant, self.seed, self.version)

    def is_finite(self) -> bool:
        return self.actor.is_finite() and self.critic.is_finite()


def init_params(
    pool_size: int,
    hidden_sizes: tuple[int, ...] = (128, 128),
    seed: int = 0,
    variant: Variant = Variant.QAPPO,
) -> PolicyParams:
    """按种子初始化；actor 输出层缩放 0.01，使初始策略接近均匀"""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    dim = feature_dim(pool_size)
    actor = MLP.init([dim, *hidden_sizes, N_MODES + pool_size], rng, out_scale=0.01)
    critic = MLP.init([dim, *hidden_sizes, 1], rng, out_scale=1.0)
    return PolicyParams(actor, critic, pool_size, Variant(variant), seed)


def split_logits(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return logits[..., :N_MODES], logits[..., N_MODES:]


@dataclass(frozen=True)
class ActResult:
    """一次决策的输出；encoding 为 None 表示没有可行动作"""
    action: DeploymentAction
    encoding: ActionEncoding | None
    log_prob: float
    value: float
    mask: ActionMask


def act(
    params: PolicyParams,
    features: np.ndarray,
    mask: ActionMask,
    greedy: bool = False,
    rng: np.random.Generator | int | None = None,
) -> ActResult:
    """掩码分解采样；无可行模式时返回 Infeasible 哨兵，log_prob 为 nan"""
    if rng is not None and not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    x = np.asarray(features, dtype=np.float64)[None, :]
    logits = params.actor(x)[0]
    value = float(params.critic(x)[0, 0])

    mode_logits, node_logits = split_logits(logits)
    encoding, log_prob = sample_action(mode_logits, node_logits, mask, rng=rng, greedy=greedy)
    if encoding is None:
        return ActResult(INFEASIBLE_ACTION, None, log_prob, value, mask)
    return ActResult(encoding.to_action(mask), encoding, log_prob, value, mask)


def feature_prefs(params: PolicyParams, prefs: PreferenceVector) -> PreferenceVector:
    """普通 PPO 的特征中偏好分量置零"""
    return PreferenceVector.zeros() if params.variant is Variant.PPO else prefs


def as_policy(
    params: PolicyParams,
    greedy: bool = True,
    rng: np.random.Generator | None = None,
) -> Callable[[NetworkState, SliceRequest, PreferenceVector], DeploymentAction]:
    """包装成 (state, request, prefs) -> action 的编排策略"""

    def policy(state: NetworkState, request: SliceRequest, prefs: PreferenceVector) -> DeploymentAction:
        features = encode_state(state, request, feature_prefs(params, prefs))
        return act(params, features, build_mask(state, request), greedy=greedy, rng=rng).action

    return policy
