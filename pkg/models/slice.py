"""切片编排领域模型

SliceRequest 代表一次到达的切片需求；NetworkState 是环境的全部可变状态
（本地服务器余量、容器、VNF 节点池、在役切片）。
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING

from pydantic import BaseModel, ConfigDict, model_validator

if TYPE_CHECKING:
    from slicing.config import EnvConfig


class QoEClassId(str, Enum):
    """QoE 等级"""
    HIGH_PRIORITY = "HighPriority"
    MEDIUM_PRIORITY = "MediumPriority"
    BEST_EFFORT = "BestEffort"


# one-hot 编码与 CSV 输出都依赖这个顺序
CLASS_ORDER: tuple[QoEClassId, ...] = (
    QoEClassId.HIGH_PRIORITY,
    QoEClassId.MEDIUM_PRIORITY,
    QoEClassId.BEST_EFFORT,
)


class QoEClass(BaseModel):
    """QoE 等级约束表中的一行

    latency_bound 单位 ms；max_share 是单个 VNF 节点允许的切片数；
    cost_bound 是经济约束上限。
    """
    model_config = ConfigDict(frozen=True)

    class_id: QoEClassId
    latency_bound: float
    max_share: int
    cost_bound: float
    cpu_demand_range: tuple[int, int]
    mem_demand_range: tuple[int, int]
    chain_length_range: tuple[int, int] = (2, 3)

    @model_validator(mode="after")
    def _check_ranges(self) -> "QoEClass":
        for name in ("cpu_demand_range", "mem_demand_range", "chain_length_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{self.class_id.value}.{name} 无效: [{lo}, {hi}]")
        if self.max_share < 1:
            raise ValueError(f"{self.class_id.value}.max_share 必须 >= 1")
        return self


class NodeHost(str, Enum):
    LOCAL = "Local"
    CLOUD = "Cloud"


class DeploymentMode(str, Enum):
    """部署方式

    VERTICAL_LOCAL 复用已有容器，HORIZONTAL_LOCAL 新建容器，
    CLOUD_OFFLOAD 卸载到云端。INFEASIBLE 是无可行动作时的哨兵。
    """
    VERTICAL_LOCAL = "VerticalLocal"
    HORIZONTAL_LOCAL = "HorizontalLocal"
    CLOUD_OFFLOAD = "CloudOffload"
    INFEASIBLE = "Infeasible"

    @property
    def host(self) -> NodeHost | None:
        if self is DeploymentMode.CLOUD_OFFLOAD:
            return NodeHost.CLOUD
        if self is DeploymentMode.INFEASIBLE:
            return None
        return NodeHost.LOCAL


# 策略网络 mode 头的顺序
MODE_ORDER: tuple[DeploymentMode, ...] = (
    DeploymentMode.VERTICAL_LOCAL,
    DeploymentMode.HORIZONTAL_LOCAL,
    DeploymentMode.CLOUD_OFFLOAD,
)


class Violation(str, Enum):
    LATENCY = "Latency"
    RELIABILITY = "Reliability"
    ECONOMICS = "Economics"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SliceRequest:
    """一次切片请求"""
    id: str
    qoe_class: QoEClass
    cpu: int
    mem: int
    chain_length: int
    intent_text: str
    arrival_index: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "class": self.qoe_class.class_id.value,
            "cpu": self.cpu,
            "mem": self.mem,
            "chain_length": self.chain_length,
            "intent_text": self.intent_text,
            "arrival_index": self.arrival_index,
        }


@dataclass
class VnfNode:
    """VNF 节点

    tenants 非空时 deployed 必为 True；最后一个租户释放后节点保持 deployed（warm）。
    """
    node_id: int
    host: NodeHost
    node_delay: float            # ms，[10, 15]
    deploy_cost: float           # [2, 4]
    deployed: bool = False
    tenants: set[str] = field(default_factory=set)

    @property
    def is_cloud(self) -> bool:
        return self.host is NodeHost.CLOUD

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "host": self.host.value,
            "node_delay": self.node_delay,
            "deploy_cost": self.deploy_cost,
            "deployed": self.deployed,
            "tenants": sorted(self.tenants),
        }


@dataclass
class Container:
    """本地服务器上的容器"""
    container_id: int
    cpu_alloc: int
    mem_alloc: int
    resident_slices: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class DeploymentAction:
    """一次部署决策

    node_ids 为链上按顺序选择的节点；target_container 仅在 VERTICAL_LOCAL 时给出。
    """
    mode: DeploymentMode
    node_ids: tuple[int, ...] = ()
    target_container: int | None = None

    @property
    def is_infeasible(self) -> bool:
        return self.mode is DeploymentMode.INFEASIBLE

    def key(self) -> tuple:
        """与节点顺序无关的规范编码，用于比较与字典序打破平局"""
        mode_rank = MODE_ORDER.index(self.mode) if self.mode in MODE_ORDER else len(MODE_ORDER)
        container = -1 if self.target_container is None else self.target_container
        return (mode_rank, container, tuple(sorted(self.node_ids)))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "node_ids": list(self.node_ids),
            "target_container": self.target_container,
        }


INFEASIBLE_ACTION = DeploymentAction(mode=DeploymentMode.INFEASIBLE)


@dataclass(frozen=True)
class DeploymentOutcome:
    """单个切片的部署结果，served 当且仅当 violations 为空"""
    slice_id: str
    class_id: QoEClassId
    latency: float
    econ_cost: float
    reliability_cost: int
    violations: tuple[Violation, ...] = ()
    fallback: bool = False       # 偏好推断走了兜底向量

    @property
    def served(self) -> bool:
        return not self.violations

    def with_violation(self, violation: Violation) -> "DeploymentOutcome":
        if violation in self.violations:
            return self
        return replace(self, violations=self.violations + (violation,))

    def to_dict(self) -> dict:
        return {
            "slice_id": self.slice_id,
            "class": self.class_id.value,
            "latency": self.latency,
            "econ_cost": self.econ_cost,
            "reliability_cost": self.reliability_cost,
            "violations": [v.value for v in self.violations],
            "served": self.served,
            "fallback": self.fallback,
        }


@dataclass(frozen=True)
class DeploymentRecord:
    """在役切片的部署记录（release 时据此归还资源）"""
    request: SliceRequest
    action: DeploymentAction
    container_id: int | None
    deployed_at: int


@dataclass
class NetworkState:
    """环境状态

    不变量：local_cpu_free + Σ container.cpu_alloc == config.local_cpu（内存同理）。
    apply/release 返回新对象，输入状态不被修改。
    """
    config: "EnvConfig"
    local_cpu_free: int
    local_mem_free: int
    nodes: list[VnfNode]
    containers: list[Container] = field(default_factory=list)
    active_slices: dict[str, DeploymentRecord] = field(default_factory=dict)
    step_index: int = 0
    next_container_id: int = 0

    def clone(self) -> "NetworkState":
        return NetworkState(
            config=self.config,
            local_cpu_free=self.local_cpu_free,
            local_mem_free=self.local_mem_free,
            nodes=[replace(n, tenants=set(n.tenants)) for n in self.nodes],
            containers=[replace(c, resident_slices=list(c.resident_slices)) for c in self.containers],
            active_slices=dict(self.active_slices),
            step_index=self.step_index,
            next_container_id=self.next_container_id,
        )

    def container(self, container_id: int) -> Container | None:
        for c in self.containers:
            if c.container_id == container_id:
                return c
        return None

    def container_slack(self, container: Container) -> tuple[int, int]:
        """容器还能纵向扩展的 (cpu, mem)"""
        cpu = min(self.config.container_cpu_cap - container.cpu_alloc, self.local_cpu_free)
        mem = min(self.config.container_mem_cap - container.mem_alloc, self.local_mem_free)
        return max(cpu, 0), max(mem, 0)

    def to_dict(self) -> dict:
        return {
            "local_cpu_free": self.local_cpu_free,
            "local_mem_free": self.local_mem_free,
            "containers": [
                {
                    "container_id": c.container_id,
                    "cpu_alloc": c.cpu_alloc,
                    "mem_alloc": c.mem_alloc,
                    "resident_slices": list(c.resident_slices),
                }
                for c in self.containers
            ],
            "nodes": [n.to_dict() for n in self.nodes],
            "active_slices": sorted(self.active_slices),
            "step_index": self.step_index,
        }
