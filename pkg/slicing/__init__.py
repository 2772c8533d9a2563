"""切片编排环境"""
from .config import EnvConfig, default_classes
from .requests import generate_requests, load_intent_templates, with_intent
from .environment import (
    reset,
    feasible_actions,
    eligible_nodes,
    vertical_candidates,
    best_vertical_container,
    apply,
    release,
    release_all,
    reconfigure,
    infeasible_outcome,
)
from .episode import (
    EpisodePolicy,
    EpisodeResult,
    InferredPrefs,
    OutcomeCallback,
    PrefsSource,
    mark_fallback,
    resolve_prefs,
    run_episode,
)

__all__ = [
    "EnvConfig",
    "default_classes",
    "generate_requests",
    "load_intent_templates",
    "with_intent",
    "reset",
    "feasible_actions",
    "eligible_nodes",
    "vertical_candidates",
    "best_vertical_container",
    "apply",
    "release",
    "release_all",
    "reconfigure",
    "infeasible_outcome",
    "EpisodePolicy",
    "EpisodeResult",
    "InferredPrefs",
    "OutcomeCallback",
    "PrefsSource",
    "mark_fallback",
    "resolve_prefs",
    "run_episode",
]
