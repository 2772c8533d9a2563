"""PPO 更新

actor 损失 = -mean(min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)) - c_ent * mean(H)，
critic 损失 = 0.5 * mean((V - R)^2)。两个网络各自用 Adam 更新并做梯度范数裁剪。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from models import TrainingDivergedError

from .adam import Adam, clip_grad_norm
from .config import AlgoConfig
from .distributions import evaluate_actions
from .gae import normalize_advantages
from .mlp import MLP
from .policy import PolicyParams, split_logits

logger = logging.getLogger(__name__)


@dataclass
class RolloutBatch:
    """用于一次更新的样本（已剔除 Infeasible 步）

    picks 中不足链长的位置填 -1。
    """
    features: np.ndarray        # (N, F)
    mode_mask: np.ndarray       # (N, 3) bool
    node_mask: np.ndarray       # (N, 3, P) bool
    chain_length: np.ndarray    # (N,)
    modes: np.ndarray           # (N,)
    picks: np.ndarray           # (N, C)
    old_log_prob: np.ndarray    # (N,)
    advantages: np.ndarray      # (N,)
    returns: np.ndarray         # (N,)

    def __len__(self) -> int:
        return len(self.features)

    def subset(self, idx: np.ndarray) -> "RolloutBatch":
        return RolloutBatch(
            features=self.features[idx],
            mode_mask=self.mode_mask[idx],
            node_mask=self.node_mask[idx],
            chain_length=self.chain_length[idx],
            modes=self.modes[idx],
            picks=self.picks[idx],
            old_log_prob=self.old_log_prob[idx],
            advantages=self.advantages[idx],
            returns=self.returns[idx],
        )


@dataclass
class UpdateStats:
    """一次 ppo_update 的统计"""
    actor_loss: float = 0.0
    critic_loss: float = 0.0
    entropy: float = 0.0
    clip_fraction: float = 0.0
    approx_kl: float = 0.0
    actor_grad_norm: float = 0.0
    critic_grad_norm: float = 0.0
    n_minibatches: int = 0
    history: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "actor_loss": self.actor_loss,
            "critic_loss": self.critic_loss,
            "entropy": self.entropy,
            "clip_fraction": self.clip_fraction,
            "approx_kl": self.approx_kl,
            "actor_grad_norm": self.actor_grad_norm,
            "critic_grad_norm": self.critic_grad_norm,
            "n_minibatches": self.n_minibatches,
        }


# ============================================================
# 损失与梯度
# ============================================================

def clipped_surrogate(ratio: np.ndarray, advantages: np.ndarray, clip: float) -> tuple[np.ndarray, np.ndarray]:
    """逐样本目标 min(rho * A, clip(rho) * A)，以及目标对 rho 的导数

    截断项严格更小时导数为 0。
    """
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantages
    objective = np.minimum(unclipped, clipped)
    d_ratio = np.where(unclipped <= clipped, advantages, 0.0)
    return objective, d_ratio


def actor_loss_and_grads(
    actor: MLP,
    batch: RolloutBatch,
    clip: float,
    entropy_coef: float,
) -> tuple[float, list[np.ndarray], dict]:
    """actor 损失及其对参数的梯度（advantages 按传入值使用）"""
    n = len(batch)
    logits, cache = actor.forward(batch.features)
    mode_logits, node_logits = split_logits(logits)

    fe = evaluate_actions(
        mode_logits, node_logits,
        batch.mode_mask, batch.node_mask, batch.chain_length,
        batch.modes, batch.picks,
    )
    log_ratio = fe.log_prob - batch.old_log_prob
    ratio = np.exp(log_ratio)
    objective, d_ratio = clipped_surrogate(ratio, batch.advantages, clip)

    loss = -objective.mean() - entropy_coef * fe.entropy.mean()

    # d loss / d log_prob = -(1/n) * dobj/drho * rho
    dl_dlogp = -(d_ratio * ratio) / n
    grad_mode = dl_dlogp[:, None] * fe.dlogp_mode - (entropy_coef / n) * fe.dent_mode
    grad_node = dl_dlogp[:, None] * fe.dlogp_node - (entropy_coef / n) * fe.dent_node
    grads = actor.backward(cache, np.concatenate([grad_mode, grad_node], axis=1))

    info = {
        "entropy": float(fe.entropy.mean()),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip)),
        "approx_kl": float(np.mean((ratio - 1.0) - log_ratio)),
    }
    return float(loss), grads, info


def critic_loss_and_grads(critic: MLP, features: np.ndarray, returns: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """0.5 * MSE 及梯度"""
    values, cache = critic.forward(features)
    err = values[:, 0] - returns
    loss = 0.5 * float(np.mean(err ** 2))
    grads = critic.backward(cache, (err / len(err))[:, None])
    return loss, grads


# ============================================================
# 更新
# ============================================================

def ppo_update(
    params: PolicyParams,
    batch: RolloutBatch,
    config: AlgoConfig | None = None,
    rng: np.random.Generator | None = None,
    optimizers: tuple[Adam, Adam] | None = None,
) -> tuple[PolicyParams, UpdateStats]:
    """对一批样本做 epochs 轮小批量更新，返回新参数（输入参数不变）

    Args:
        params: 当前参数
        batch: 样本，advantages 为原始值，这里统一做归一化
        config: 超参数
        rng: 小批量打乱用的随机数发生器
        optimizers: (actor, critic) 的 Adam 状态，跨更新复用时传入

    Raises:
        TrainingDivergedError: 损失或参数出现非有限值
    """
    config = config or AlgoConfig()
    rng = rng or np.random.default_rng(0)
    new = params.copy()
    stats = UpdateStats()
    if len(batch) == 0:
        return new, stats

    batch = replace(batch, advantages=normalize_advantages(batch.advantages))

    actor_params = new.actor.parameters()
    critic_params = new.critic.parameters()
    if optimizers is None:
        actor_opt, critic_opt = Adam(actor_params, lr=config.lr), Adam(critic_params, lr=config.lr)
    else:
        actor_opt, critic_opt = optimizers
    n = len(batch)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch):
            mb = batch.subset(order[start:start + config.minibatch])

            a_loss, a_grads, info = actor_loss_and_grads(new.actor, mb, config.clip, config.entropy_coef)
            c_loss, c_grads = critic_loss_and_grads(new.critic, mb.features, mb.returns)
            if not (np.isfinite(a_loss) and np.isfinite(c_loss)):
                raise TrainingDivergedError(
                    f"损失非有限值 (epoch={epoch}, start={start}): actor={a_loss}, critic={c_loss}, "
                    f"adv_range=[{mb.advantages.min():.3g}, {mb.advantages.max():.3g}], "
                    f"ret_range=[{mb.returns.min():.3g}, {mb.returns.max():.3g}]"
                )

            a_grads, a_norm = clip_grad_norm(a_grads, config.max_grad_norm)
            c_grads, c_norm = clip_grad_norm(c_grads, config.max_grad_norm)
            actor_opt.step(actor_params, a_grads)
            critic_opt.step(critic_params, c_grads)

            stats.history.append({
                "actor_loss": a_loss,
                "critic_loss": c_loss,
                "actor_grad_norm": a_norm,
                "critic_grad_norm": c_norm,
                **info,
            })

    if not new.is_finite():
        raise TrainingDivergedError("更新后参数出现非有限值")

    stats.n_minibatches = len(stats.history)
    for key in ("actor_loss", "critic_loss", "entropy", "clip_fraction", "approx_kl",
                "actor_grad_norm", "critic_grad_norm"):
        setattr(stats, key, float(np.mean([h[key] for h in stats.history])))
    logger.debug(
        "ppo_update: n=%d actor=%.4f critic=%.4f H=%.3f clip=%.3f kl=%.4f",
        n, stats.actor_loss, stats.critic_loss, stats.entropy, stats.clip_fraction, stats.approx_kl,
    )
    return new, stats
