"""策略评估

每个回合的请求序列和环境种子只由 (seed, 回合序号) 决定，
不同策略在同一 seed 下面对完全相同的请求，可以直接配对比较。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

import qoe
from models import CLASS_ORDER, DeploymentOutcome, PreferenceVector
from slicing import EnvConfig, EpisodePolicy, OutcomeCallback, PrefsSource, generate_requests, run_episode

from .policy import PolicyParams, as_policy

logger = logging.getLogger(__name__)

PrefsLike = PreferenceVector | PrefsSource | None


@dataclass
class EvaluationResult:
    """聚合评估指标（按切片平均，Infeasible 切片计入哨兵值）"""
    n_requests: int
    episodes: int
    mean_latency: float
    mean_cost: float
    mean_reliability: float
    availability: float
    mean_reward: float
    class_availability: dict[str, float] = field(default_factory=dict)
    reconfigurations: int = 0

    def to_dict(self) -> dict:
        return {
            "n_requests": self.n_requests,
            "episodes": self.episodes,
            "mean_latency": self.mean_latency,
            "mean_cost": self.mean_cost,
            "mean_reliability": self.mean_reliability,
            "availability": self.availability,
            "mean_reward": self.mean_reward,
            **{f"availability_{k}": v for k, v in self.class_availability.items()},
            "reconfigurations": self.reconfigurations,
        }


def episode_seeds(seed: int, episodes: int) -> list[int]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    return [int(s) for s in rng.integers(2**31 - 1, size=episodes)]


def as_prefs_source(prefs_source: PrefsLike) -> PrefsSource:
    if prefs_source is None:
        return lambda request: PreferenceVector.equal()
    if isinstance(prefs_source, PreferenceVector):
        fixed = prefs_source.validate()
        return lambda request: fixed
    return prefs_source


def evaluate_policy(
    policy: EpisodePolicy,
    env_config: EnvConfig,
    n_requests: int,
    prefs_source: PrefsLike = None,
    episodes: int = 20,
    seed: int = 0,
    intent_change_prob: float = 0.0,
    on_outcome: OutcomeCallback | None = None,
) -> EvaluationResult:
    """对任意编排策略做多回合评估"""
    if episodes < 1:
        raise ValueError(f"episodes 必须 >= 1: {episodes}")
    if n_requests < 1:
        raise ValueError(f"n_requests 必须 >= 1: {n_requests}")

    source = as_prefs_source(prefs_source)
    outcomes: list[DeploymentOutcome] = []
    rewards: list[float] = []
    reconfigurations = 0

    for ep_seed in episode_seeds(seed, episodes):
        requests = generate_requests(n_requests, ep_seed, config=env_config)
        result = run_episode(
            env_config, requests, policy, source,
            seed=ep_seed, intent_change_prob=intent_change_prob, on_outcome=on_outcome,
        )
        outcomes.extend(result.outcomes)
        rewards.append(result.total_reward)
        reconfigurations += result.reconfigurations

    per_class = {}
    for class_id in CLASS_ORDER:
        subset = [o for o in outcomes if o.class_id is class_id]
        per_class[class_id.value] = qoe.availability_ratio(subset) if subset else float("nan")

    return EvaluationResult(
        n_requests=n_requests,
        episodes=episodes,
        mean_latency=float(np.mean([o.latency for o in outcomes])),
        mean_cost=float(np.mean([o.econ_cost for o in outcomes])),
        mean_reliability=float(np.mean([o.reliability_cost for o in outcomes])),
        availability=qoe.availability_ratio(outcomes),
        mean_reward=float(np.mean(rewards)),
        class_availability=per_class,
        reconfigurations=reconfigurations,
    )


def evaluate(
    params: PolicyParams,
    env_config: EnvConfig,
    n_requests: int,
    prefs_source: PrefsLike = None,
    episodes: int = 20,
    seed: int = 0,
    intent_change_prob: float = 0.0,
    on_outcome: OutcomeCallback | None = None,
) -> EvaluationResult:
    """贪心动作选择下评估学习到的策略"""
    return evaluate_policy(
        as_policy(params, greedy=True),
        env_config,
        n_requests,
        prefs_source=prefs_source,
        episodes=episodes,
        seed=seed,
        intent_change_prob=intent_change_prob,
        on_outcome=on_outcome,
    )
