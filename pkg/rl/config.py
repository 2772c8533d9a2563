"""PPO / QAPPO 超参数

Example:
    config = AlgoConfig()                                  # lr 1e-4, clip 0.1, minibatch 1024
    config = AlgoConfig(horizon=256, minibatch=64, epochs=4)
"""
from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Variant(str, Enum):
    """PPO 使用固定等权奖励和零偏好特征；QAPPO 使用推理得到的逐请求偏好"""
    PPO = "PPO"
    QAPPO = "QAPPO"


class AlgoConfig(BaseModel):
    """对应 YAML 中的 algo 段"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    hidden_sizes: tuple[int, ...] = (128, 128)
    lr: float = Field(default=1e-4, gt=0)
    gamma: float = Field(default=0.99, ge=0, le=1)
    gae_lambda: float = Field(default=0.95, ge=0, le=1)
    clip: float = Field(default=0.1, gt=0, lt=1)
    epochs: int = Field(default=10, ge=1)
    # 每个回合收集 horizon 步，按 minibatch 切分做 epochs 轮更新
    minibatch: int = Field(default=1024, ge=1)
    horizon: int = Field(default=4096, ge=1)
    entropy_coef: float = Field(default=0.01, ge=0)
    max_grad_norm: float = Field(default=0.5, gt=0)
    total_steps: int = Field(default=200_000, ge=0)
    episode_length_range: tuple[int, int] = (4, 20)
    rollout_workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "AlgoConfig":
        lo, hi = self.episode_length_range
        if lo < 1 or hi < lo:
            raise ValueError(f"episode_length_range 无效: [{lo}, {hi}]")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError(f"hidden_sizes 无效: {self.hidden_sizes}")
        return self
