"""环境配置

EnvConfig 对应 YAML 中的 env 段。所有常量（容量、时延、费用、QoE 约束表）都在这里，
归一化常量和违约惩罚也放在这里，供 qoe 模块读取。

Example:
    config = EnvConfig()                      # 默认 12 节点池，6 本地 / 6 云端
    config = EnvConfig(pool_size=6, offload_delay_ms=50)
"""
from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models import ConfigurationError, QoEClass, QoEClassId
from models.slice import CLASS_ORDER


def default_classes() -> list[QoEClass]:
    """默认 QoE 等级表：高优先级与中优先级属于成本敏感（25），尽力而为为通用（40）"""
    return [
        QoEClass(
            class_id=QoEClassId.HIGH_PRIORITY,
            latency_bound=30,
            max_share=1,
            cost_bound=25,
            cpu_demand_range=(2, 5),
            mem_demand_range=(2, 4),
        ),
        QoEClass(
            class_id=QoEClassId.MEDIUM_PRIORITY,
            latency_bound=100,
            max_share=2,
            cost_bound=25,
            cpu_demand_range=(2, 5),
            mem_demand_range=(2, 4),
        ),
        QoEClass(
            class_id=QoEClassId.BEST_EFFORT,
            latency_bound=150,
            max_share=4,
            cost_bound=40,
            cpu_demand_range=(3, 6),
            mem_demand_range=(3, 6),
        ),
    ]


class EnvConfig(BaseModel):
    """切片环境配置"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    # VNF 节点池
    pool_size: int = Field(default=12, ge=1)
    local_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    node_delay_range: tuple[int, int] = (10, 15)
    node_cost_range: tuple[int, int] = (2, 4)

    # 本地服务器
    local_cpu: int = Field(default=40, ge=1)
    local_mem: int = Field(default=30, ge=1)
    container_cpu_cap: int = Field(default=16, ge=1)
    container_mem_cap: int = Field(default=12, ge=1)

    # 时延（ms）与费用
    boot_delay_ms: float = 30
    offload_delay_ms: float = 40
    local_server_cost: float = 30
    cloud_server_cost: float = 10

    # 请求
    chain_length_range: tuple[int, int] = (2, 3)
    class_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    classes: list[QoEClass] = Field(default_factory=default_classes)

    # QoE 成本模型
    latency_normalizer: float = Field(default=150.0, gt=0)
    cost_normalizer: float = Field(default=40.0, gt=0)
    violation_penalty: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "EnvConfig":
        for name in ("node_delay_range", "node_cost_range", "chain_length_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} 无效: [{lo}, {hi}]")
        if self.chain_length_range[0] < 1:
            raise ValueError("chain_length_range 下限必须 >= 1")
        if abs(sum(self.class_mix) - 1.0) > 1e-9 or min(self.class_mix) < 0:
            raise ValueError(f"class_mix 必须是概率分布: {self.class_mix}")
        ids = sorted(c.class_id.value for c in self.classes)
        if ids != sorted(c.value for c in CLASS_ORDER):
            raise ValueError(f"classes 必须恰好包含三个 QoE 等级: {ids}")
        # 链长以全局配置为准
        object.__setattr__(
            self,
            "classes",
            [c.model_copy(update={"chain_length_range": self.chain_length_range}) for c in self.classes],
        )
        return self

    @property
    def n_local(self) -> int:
        return int(round(self.pool_size * self.local_fraction))

    @property
    def max_chain_length(self) -> int:
        return self.chain_length_range[1]

    def class_table(self) -> dict[QoEClassId, QoEClass]:
        return {c.class_id: c for c in self.classes}

    def qoe_class(self, class_id: QoEClassId | str) -> QoEClass:
        return self.class_table()[QoEClassId(class_id)]

    def ensure_valid(self) -> "EnvConfig":
        """reset 之前的结构性检查"""
        if self.pool_size < self.max_chain_length:
            raise ConfigurationError(
                f"pool_size={self.pool_size} 小于最大链长 {self.max_chain_length}"
            )
        return self
