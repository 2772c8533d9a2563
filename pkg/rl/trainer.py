"""PPO / QAPPO 训练循环

一个训练回合 = 一条随机长度（默认 4-20）的请求序列，结束后批量释放，
下一回合用新的种子重置环境。每轮收集约 horizon 步（各采样器都以完整回合结束），
计算 GAE 后做一次 ppo_update。

QAPPO 在构造回合时对每个请求调用一次 intent_provider；LLM 不会出现在更新循环里。
"""
from __future__ import annotations

import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

import qoe
from models import DeploymentOutcome, PreferenceVector, QoEMetrics, SliceRequest
from slicing import EnvConfig, PrefsSource, apply, generate_requests, mark_fallback, resolve_prefs, reset

from .adam import Adam
from .config import AlgoConfig, Variant
from .distributions import ActionMask, build_mask
from .features import encode_state
from .gae import gae
from .policy import PolicyParams, act, init_params
from .ppo import RolloutBatch, UpdateStats, ppo_update

logger = logging.getLogger(__name__)

IntentProvider = PrefsSource
OutcomeHook = Callable[[SliceRequest, PreferenceVector, DeploymentOutcome, QoEMetrics], None]
UpdateCallback = Callable[[int, float, UpdateStats], None]

EQUAL_PREFS = PreferenceVector.equal()


@dataclass
class Transition:
    features: np.ndarray
    mask: ActionMask
    mode: int
    picks: tuple[int, ...]
    log_prob: float
    value: float
    reward: float
    done: bool
    trainable: bool


@dataclass
class Segment:
    """一个采样器在一轮中收集的完整回合"""
    transitions: list[Transition] = field(default_factory=list)
    episode_rewards: list[float] = field(default_factory=list)


def episode_prefs(
    requests: list[SliceRequest],
    variant: Variant,
    intent_provider: IntentProvider | None,
) -> tuple[list[PreferenceVector], list[PreferenceVector], list[bool]]:
    """返回 (特征用偏好, 奖励用偏好, 是否兜底)

    PPO：特征全零、奖励等权；QAPPO：两者都用 intent_provider 的输出。
    """
    if variant is Variant.PPO:
        n = len(requests)
        return [PreferenceVector.zeros()] * n, [EQUAL_PREFS] * n, [False] * n
    if intent_provider is None:
        raise ValueError("QAPPO 训练需要 intent_provider")
    resolved = [resolve_prefs(intent_provider(r)) for r in requests]
    prefs = [p.validate() for p, _ in resolved]
    return prefs, prefs, [fb for _, fb in resolved]


def run_training_episode(
    params: PolicyParams,
    env_config: EnvConfig,
    algo_config: AlgoConfig,
    intent_provider: IntentProvider | None,
    rng: np.random.Generator,
    outcome_hook: OutcomeHook | None = None,
) -> tuple[list[Transition], float]:
    """采样一个训练回合，返回 (逐步转移, 回合总奖励)"""
    episode_seed = int(rng.integers(2**31 - 1))
    lo, hi = algo_config.episode_length_range
    n = int(rng.integers(lo, hi + 1))

    requests = generate_requests(n, episode_seed, config=env_config)
    feature_prefs, reward_prefs, fallbacks = episode_prefs(requests, params.variant, intent_provider)
    state = reset(env_config, seed=episode_seed)

    transitions: list[Transition] = []
    total = 0.0
    for i, request in enumerate(requests):
        features = encode_state(state, request, feature_prefs[i])
        mask = build_mask(state, request)
        result = act(params, features, mask, rng=rng)

        state, outcome = apply(state, request, result.action)
        outcome = mark_fallback(outcome, fallbacks[i])
        metrics = qoe.outcome_metrics(outcome, request.chain_length, env_config)
        r = qoe.reward(metrics, reward_prefs[i], outcome.violations, penalty=env_config.violation_penalty)
        total += r

        encoding = result.encoding
        transitions.append(Transition(
            features=features,
            mask=mask,
            mode=encoding.mode if encoding else -1,
            picks=encoding.nodes if encoding else (),
            log_prob=result.log_prob,
            value=result.value,
            reward=r,
            done=i == n - 1,
            trainable=encoding is not None,
        ))
        if outcome_hook is not None:
            outcome_hook(request, reward_prefs[i], outcome, metrics)

    return transitions, total


def collect_segment(
    params: PolicyParams,
    env_config: EnvConfig,
    algo_config: AlgoConfig,
    intent_provider: IntentProvider | None,
    quota: int,
    seed_seq: np.random.SeedSequence,
    outcome_hook: OutcomeHook | None = None,
) -> Segment:
    """收集至少 quota 步，最后一个回合完整结束"""
    rng = np.random.default_rng(seed_seq)
    segment = Segment()
    while len(segment.transitions) < quota:
        transitions, total = run_training_episode(
            params, env_config, algo_config, intent_provider, rng, outcome_hook
        )
        segment.transitions.extend(transitions)
        segment.episode_rewards.append(total)
    return segment


def build_batch(segments: list[Segment], algo_config: AlgoConfig, max_chain: int) -> RolloutBatch:
    """逐段计算 GAE 后拼接，剔除 Infeasible 步"""
    rows: list[Transition] = []
    advs, rets = [], []
    for seg in segments:
        if not seg.transitions:
            continue
        a, r = gae(
            [t.reward for t in seg.transitions],
            [t.value for t in seg.transitions],
            [t.done for t in seg.transitions],
            gamma=algo_config.gamma,
            lam=algo_config.gae_lambda,
        )
        keep = [i for i, t in enumerate(seg.transitions) if t.trainable]
        rows.extend(seg.transitions[i] for i in keep)
        advs.append(a[keep])
        rets.append(r[keep])

    if not rows:
        return RolloutBatch(
            features=np.zeros((0, 0)), mode_mask=np.zeros((0, 3), bool), node_mask=np.zeros((0, 3, 0), bool),
            chain_length=np.zeros(0, int), modes=np.zeros(0, int), picks=np.zeros((0, max_chain), int),
            old_log_prob=np.zeros(0), advantages=np.zeros(0), returns=np.zeros(0),
        )

    picks = np.full((len(rows), max_chain), -1, dtype=np.int64)
    for i, t in enumerate(rows):
        picks[i, :len(t.picks)] = t.picks

    return RolloutBatch(
        features=np.stack([t.features for t in rows]),
        mode_mask=np.stack([t.mask.modes for t in rows]),
        node_mask=np.stack([t.mask.nodes for t in rows]),
        chain_length=np.array([t.mask.chain_length for t in rows], dtype=np.int64),
        modes=np.array([t.mode for t in rows], dtype=np.int64),
        picks=picks,
        old_log_prob=np.array([t.log_prob for t in rows]),
        advantages=np.concatenate(advs),
        returns=np.concatenate(rets),
    )


def _quotas(total: int, workers: int) -> list[int]:
    base, extra = divmod(total, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def train(
    env_config: EnvConfig | None = None,
    algo_config: AlgoConfig | None = None,
    variant: Variant | str = Variant.QAPPO,
    intent_provider: IntentProvider | None = None,
    total_steps: int | None = None,
    seed: int = 0,
    outcome_hook: OutcomeHook | None = None,
    on_update: UpdateCallback | None = None,
    executor: Executor | None = None,
) -> tuple[PolicyParams, list[tuple[int, float]]]:
    """训练策略

    Args:
        env_config: 环境配置
        algo_config: 超参数
        variant: PPO 或 QAPPO
        intent_provider: QAPPO 的逐请求偏好来源
        total_steps: 环境步数预算，默认取 algo_config.total_steps
        seed: 随机种子；相同种子得到相同的参数和曲线
        outcome_hook: 每个部署结果的回调（用于写入记忆库），设置后强制单线程采样
        on_update: 每次更新后的回调 (steps, mean_reward, stats)
        executor: 并行采样用的线程池；为 None 时按 rollout_workers 自建

    Returns:
        (最终参数, [(累计步数, 本轮平均回合奖励), ...])
    """
    env_config = (env_config or EnvConfig()).ensure_valid()
    algo_config = algo_config or AlgoConfig()
    variant = Variant(variant)
    budget = algo_config.total_steps if total_steps is None else total_steps
    if budget < 0:
        raise ValueError(f"total_steps 不能为负: {budget}")

    params = init_params(env_config.pool_size, algo_config.hidden_sizes, seed=seed, variant=variant)
    curve: list[tuple[int, float]] = []
    if budget == 0:
        return params, curve

    workers = 1 if outcome_hook is not None else algo_config.rollout_workers
    own_executor = executor is None and workers > 1
    if own_executor:
        executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rollout")

    optimizers = (
        Adam(params.actor.parameters(), lr=algo_config.lr),
        Adam(params.critic.parameters(), lr=algo_config.lr),
    )

    logger.info(
        "开始训练 %s: seed=%d, budget=%d, horizon=%d, workers=%d",
        variant.value, seed, budget, algo_config.horizon, workers,
    )
    steps = 0
    update = 0
    try:
        while steps < budget:
            quota = min(algo_config.horizon, budget - steps)
            seqs = [np.random.SeedSequence(seed, spawn_key=(1, update, w)) for w in range(workers)]
            snapshot = params

            def collect(args: tuple[int, np.random.SeedSequence]) -> Segment:
                q, ss = args
                return collect_segment(snapshot, env_config, algo_config, intent_provider, q, ss, outcome_hook)

            jobs = list(zip(_quotas(quota, workers), seqs))
            if executor is not None and workers > 1:
                segments = list(executor.map(collect, jobs))
            else:
                segments = [collect(job) for job in jobs]

            batch = build_batch(segments, algo_config, env_config.max_chain_length)
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, update)))
            params, stats = ppo_update(params, batch, algo_config, rng=rng, optimizers=optimizers)

            steps += sum(len(s.transitions) for s in segments)
            episode_rewards = [r for s in segments for r in s.episode_rewards]
            mean_reward = float(np.mean(episode_rewards))
            curve.append((steps, mean_reward))
            update += 1

            logger.info(
                "[%s seed=%d] step=%d mean_reward=%.4f actor=%.4f critic=%.4f H=%.3f",
                variant.value, seed, steps, mean_reward, stats.actor_loss, stats.critic_loss, stats.entropy,
            )
            if on_update is not None:
                on_update(steps, mean_reward, stats)
    finally:
        if own_executor:
            executor.shutdown()

    return params, curve
