"""数据模型"""
from .errors import (
    SlicingError,
    ConfigurationError,
    ContractViolationError,
    SliceNotFoundError,
    PreferenceParseError,
    SnapshotLoadError,
    OracleGuardError,
    CheckpointError,
    CheckpointNotFoundError,
    TrainingDivergedError,
)
from .slice import (
    CLASS_ORDER,
    MODE_ORDER,
    INFEASIBLE_ACTION,
    Container,
    DeploymentAction,
    DeploymentMode,
    DeploymentOutcome,
    DeploymentRecord,
    NetworkState,
    NodeHost,
    QoEClass,
    QoEClassId,
    SliceRequest,
    Violation,
    VnfNode,
)
from .preference import PreferenceVector, QoEMetrics
from .intent import Exemplar, IntentEntry, Prompt

__all__ = [
    # errors
    "SlicingError",
    "ConfigurationError",
    "ContractViolationError",
    "SliceNotFoundError",
    "PreferenceParseError",
    "SnapshotLoadError",
    "OracleGuardError",
    "CheckpointError",
    "CheckpointNotFoundError",
    "TrainingDivergedError",
    # slice
    "CLASS_ORDER",
    "MODE_ORDER",
    "INFEASIBLE_ACTION",
    "Container",
    "DeploymentAction",
    "DeploymentMode",
    "DeploymentOutcome",
    "DeploymentRecord",
    "NetworkState",
    "NodeHost",
    "QoEClass",
    "QoEClassId",
    "SliceRequest",
    "Violation",
    "VnfNode",
    # preference
    "PreferenceVector",
    "QoEMetrics",
    # intent
    "Exemplar",
    "IntentEntry",
    "Prompt",
]
