"""QoE 偏好向量与指标"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class PreferenceVector:
    """(latency, reliability, economics) 三维单纯形上的权重

    构造时不做校验：PPO 基线的特征里会出现全零向量，
    需要单纯形的地方调用 validate()。
    """
    w_latency: float
    w_reliability: float
    w_econ: float

    @classmethod
    def equal(cls) -> "PreferenceVector":
        return cls(1 / 3, 1 / 3, 1 / 3)

    @classmethod
    def zeros(cls) -> "PreferenceVector":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_weights(cls, weights: Iterable[float], normalize: bool = False) -> "PreferenceVector":
        w = np.asarray(list(weights), dtype=np.float64)
        if w.shape != (3,):
            raise ValueError(f"偏好向量必须是 3 维: {w.tolist()}")
        if normalize:
            total = float(w.sum())
            if total <= 0:
                raise ValueError(f"无法归一化: {w.tolist()}")
            w = w / total
        return cls(float(w[0]), float(w[1]), float(w[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.w_latency, self.w_reliability, self.w_econ], dtype=np.float64)

    def is_on_simplex(self, tol: float = SIMPLEX_TOL) -> bool:
        w = self.as_array()
        return bool(np.all(np.isfinite(w)) and np.all(w >= 0) and abs(w.sum() - 1.0) <= tol)

    def validate(self) -> "PreferenceVector":
        if not self.is_on_simplex():
            raise ValueError(f"偏好向量不在单纯形上: {self.as_tuple()}")
        return self

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_latency, self.w_reliability, self.w_econ)

    def to_dict(self) -> dict:
        return {
            "w_latency": self.w_latency,
            "w_reliability": self.w_reliability,
            "w_econ": self.w_econ,
        }


@dataclass(frozen=True)
class QoEMetrics:
    """单个切片的 QoE 指标

    latency_hat = latency / 150，cost_hat = econ_cost / 40，
    reliability_hat = reliability_cost / chain_length（归一化常量来自 EnvConfig）。
    """
    latency: float
    econ_cost: float
    reliability_cost: float
    latency_hat: float
    cost_hat: float
    reliability_hat: float

    @classmethod
    def from_raw(
        cls,
        latency: float,
        econ_cost: float,
        reliability_cost: float,
        chain_length: int,
        latency_normalizer: float = 150.0,
        cost_normalizer: float = 40.0,
    ) -> "QoEMetrics":
        return cls(
            latency=latency,
            econ_cost=econ_cost,
            reliability_cost=reliability_cost,
            latency_hat=latency / latency_normalizer,
            cost_hat=econ_cost / cost_normalizer,
            reliability_hat=reliability_cost / max(chain_length, 1),
        )

    def normalized(self) -> np.ndarray:
        """按 PreferenceVector 的分量顺序 (L, R, C) 排列"""
        return np.array([self.latency_hat, self.reliability_hat, self.cost_hat], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "latency": self.latency,
            "econ_cost": self.econ_cost,
            "reliability_cost": self.reliability_cost,
        }
