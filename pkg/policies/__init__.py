"""基线策略与穷举基准"""
from .heuristics import local_first, cloud_only
from .oracle import (
    MAX_CHAIN_LENGTH,
    MAX_POOL_SIZE,
    MAX_REQUESTS,
    Policy,
    SequenceResult,
    brute_force_optimal,
    check_guard,
    sequence_cost,
    step_cost,
)

__all__ = [
    "local_first",
    "cloud_only",
    "MAX_CHAIN_LENGTH",
    "MAX_POOL_SIZE",
    "MAX_REQUESTS",
    "Policy",
    "SequenceResult",
    "brute_force_optimal",
    "check_guard",
    "sequence_cost",
    "step_cost",
]
