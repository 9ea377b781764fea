"""Model specifications, transition-graph checks and the example catalog."""

from .base import (
    STAR,
    ModelSpec,
    TransitionGraph,
    audit_rates,
    check_acyclic,
    evaluate_rate,
    reachable,
    transition_graph,
)
from .catalog import BUILTINS, builtin
from .config import compile_expression, model_from_mapping, parse_model_config

__all__ = [
    "STAR",
    "ModelSpec",
    "TransitionGraph",
    "audit_rates",
    "check_acyclic",
    "evaluate_rate",
    "reachable",
    "transition_graph",
    "BUILTINS",
    "builtin",
    "compile_expression",
    "model_from_mapping",
    "parse_model_config",
]
