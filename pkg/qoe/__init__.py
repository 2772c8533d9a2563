"""QoE 成本模型"""
from .model import (
    latency_ms,
    econ_cost,
    reliability_cost,
    compute_metrics,
    outcome_metrics,
    sentinel_metrics,
    weighted_cost,
    check_constraints,
    availability_ratio,
    reward,
    audit_final,
)

__all__ = [
    "latency_ms",
    "econ_cost",
    "reliability_cost",
    "compute_metrics",
    "outcome_metrics",
    "sentinel_metrics",
    "weighted_cost",
    "check_constraints",
    "availability_ratio",
    "reward",
    "audit_final",
]
