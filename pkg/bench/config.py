"""工作台配置

YAML 文件分为 env / algo / intent / memory / bench 五段，各段由 pydantic 校验。
配置哈希写进每个输出文件，用来标识产出它的配置。

Example:
    config = load_config()                          # config/default.yaml
    config = load_config("experiments/small.yaml")
    config_hash(config)                             # "3f9a0c12be47"
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from enum import Enum
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from models import CLASS_ORDER, ConfigurationError, PreferenceVector, QoEClassId
from rl import AlgoConfig
from slicing import EnvConfig
from intent import CLASS_DEFAULTS
from memory import DEFAULT_AGING_LAMBDA, DEFAULT_TAU

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "default.yaml"


class PolicyName(str, Enum):
    QAPPO = "QAPPO"
    PPO = "PPO"
    LOCAL_FIRST = "LocalFirst"
    CLOUD_ONLY = "CloudOnly"


POLICY_ORDER = tuple(PolicyName)


class IntentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(default=4, ge=1)
    client: str = "mock"
    class_defaults: dict[QoEClassId, tuple[float, float, float]] = Field(
        default_factory=lambda: {c: v.as_tuple() for c, v in CLASS_DEFAULTS.items()}
    )

    @field_validator("client")
    @classmethod
    def _check_client(cls, v: str) -> str:
        if v not in ("mock", "remote"):
            raise ValueError(f"client 必须是 mock 或 remote: {v}")
        return v

    @field_validator("class_defaults")
    @classmethod
    def _check_defaults(cls, v: dict) -> dict:
        missing = [c.value for c in CLASS_ORDER if c not in v]
        if missing:
            raise ValueError(f"class_defaults 缺少等级: {missing}")
        for class_id, weights in v.items():
            PreferenceVector(*weights).validate()
        return v

    def default_vectors(self) -> dict[QoEClassId, PreferenceVector]:
        return {c: PreferenceVector(*w) for c, w in self.class_defaults.items()}


class MemoryConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    aging_lambda: float = Field(default=DEFAULT_AGING_LAMBDA, ge=0)
    tau: float = Field(default=DEFAULT_TAU, gt=0, le=1)
    seed_path: str | None = None          # 默认 data/seed_memory.jsonl
    snapshot_path: str | None = None      # 默认 SLICING_MEMORY_PATH
    log_outcomes: bool = False


class BenchConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    policies: tuple[PolicyName, ...] = POLICY_ORDER
    request_counts: tuple[int, ...] = (4, 8, 12, 16, 20)
    episodes_per_point: int = Field(default=20, ge=1)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    intent_change_prob: float = Field(default=0.0, ge=0, le=1)
    workers: int = Field(default=1, ge=1)

    # 穷举审计的小实例
    oracle_instances: int = Field(default=100, ge=1)
    oracle_pool_size: int = Field(default=6, ge=2)
    oracle_max_requests: int = Field(default=3, ge=1)

    @field_validator("request_counts")
    @classmethod
    def _check_counts(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or min(v) < 1:
            raise ValueError(f"request_counts 必须为正整数: {v}")
        return v


class WorkbenchConfig(BaseModel):
    """完整的工作台配置"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    env: EnvConfig = Field(default_factory=EnvConfig)
    algo: AlgoConfig = Field(default_factory=AlgoConfig)
    intent: IntentConfig = Field(default_factory=IntentConfig)
    memory: MemoryConfig = Field(default_factory=MemoryConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)


def load_config(path: str | Path | None = None) -> WorkbenchConfig:
    """读取并校验 YAML 配置

    path 为空时读取 config/default.yaml；文件不存在时使用内置默认值。

    Raises:
        ConfigurationError: 文件无法解析或取值无效
    """
    if path is None:
        src = DEFAULT_CONFIG_PATH
        if not src.exists():
            logger.info("未找到 %s，使用内置默认配置", src)
            return WorkbenchConfig()
    else:
        src = Path(path)
        if not src.exists():
            raise ConfigurationError(f"配置文件不存在: {src}")

    try:
        raw = yaml.safe_load(src.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{src}: YAML 解析失败: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{src}: 顶层必须是映射")

    try:
        return WorkbenchConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"{src}: 配置无效\n{e}") from e


def config_hash(config: WorkbenchConfig) -> str:
    """规范 JSON 的 md5 前 12 位"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.md5(canonical.encode("utf-8")).hexdigest()[:12]


def get_data_dir() -> Path:
    """输出根目录，从环境变量 SLICING_DATA_DIR 读取，默认为 .data"""
    return Path(os.getenv("SLICING_DATA_DIR", ".data"))
