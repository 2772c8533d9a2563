"""实验工作台：配置、运行器与命令行"""
from .config import (
    POLICY_ORDER,
    BenchConfig,
    IntentConfig,
    MemoryConfig,
    PolicyName,
    WorkbenchConfig,
    config_hash,
    get_data_dir,
    load_config,
)
from .result import RunResult
from .runner import (
    build_inferencer,
    build_store,
    checkpoint_path,
    curve_path,
    run_compare,
    run_intent,
    run_memory_inspect,
    run_oracle_audit,
    run_train,
)

__all__ = [
    "POLICY_ORDER",
    "BenchConfig",
    "IntentConfig",
    "MemoryConfig",
    "PolicyName",
    "WorkbenchConfig",
    "config_hash",
    "get_data_dir",
    "load_config",
    "RunResult",
    "build_inferencer",
    "build_store",
    "checkpoint_path",
    "curve_path",
    "run_compare",
    "run_intent",
    "run_memory_inspect",
    "run_oracle_audit",
    "run_train",
]
