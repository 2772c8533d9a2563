"""PPO / QAPPO（numpy 实现）"""
from .config import AlgoConfig, Variant
from .mlp import MLP
from .adam import Adam, clip_grad_norm
from .features import FEATURE_LAYOUT, encode_state, feature_dim
from .distributions import (
    MODE_HEADS,
    ActionEncoding,
    ActionMask,
    build_mask,
    evaluate_actions,
    masked_log_softmax,
    sample_action,
)
from .gae import gae, normalize_advantages
from .policy import ActResult, PolicyParams, act, as_policy, init_params
from .ppo import RolloutBatch, UpdateStats, actor_loss_and_grads, clipped_surrogate, critic_loss_and_grads, ppo_update
from .trainer import IntentProvider, train
from .evaluation import EvaluationResult, episode_seeds, evaluate, evaluate_policy
from .checkpoint import load_checkpoint, read_header, save_checkpoint

__all__ = [
    "AlgoConfig",
    "Variant",
    "MLP",
    "Adam",
    "clip_grad_norm",
    "FEATURE_LAYOUT",
    "encode_state",
    "feature_dim",
    "MODE_HEADS",
    "ActionEncoding",
    "ActionMask",
    "build_mask",
    "evaluate_actions",
    "masked_log_softmax",
    "sample_action",
    "gae",
    "normalize_advantages",
    "ActResult",
    "PolicyParams",
    "act",
    "as_policy",
    "init_params",
    "RolloutBatch",
    "UpdateStats",
    "actor_loss_and_grads",
    "clipped_surrogate",
    "critic_loss_and_grads",
    "ppo_update",
    "IntentProvider",
    "train",
    "EvaluationResult",
    "episode_seeds",
    "evaluate",
    "evaluate_policy",
    "load_checkpoint",
    "read_header",
    "save_checkpoint",
]
