"""意图记忆库"""
from .store import DEFAULT_AGING_LAMBDA, DEFAULT_TAU, MemoryStore
from .aging import age_factor, age_weights
from .operations import (
    SEED_PATH,
    BootstrapSummary,
    GateDecision,
    GateResult,
    bootstrap,
    load_seed_records,
    log_outcome,
    redundancy_gate,
)
from .storage import SNAPSHOT_VERSION, MemoryRecord, get_memory_path, load, snapshot

__all__ = [
    "DEFAULT_AGING_LAMBDA",
    "DEFAULT_TAU",
    "MemoryStore",
    "age_factor",
    "age_weights",
    "SEED_PATH",
    "BootstrapSummary",
    "GateDecision",
    "GateResult",
    "bootstrap",
    "load_seed_records",
    "log_outcome",
    "redundancy_gate",
    "SNAPSHOT_VERSION",
    "MemoryRecord",
    "get_memory_path",
    "load",
    "snapshot",
]
