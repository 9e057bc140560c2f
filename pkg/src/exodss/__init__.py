"""exodss: an interactive exoskeleton-facade design sandbox.

A session server evaluates every user edit against structural, environmental
and fabrication metrics, returning encapsulated improved/neutral/worsened
feedback over a newline-delimited frame protocol (TCP or WebSocket).
Headless seeded agents stand in for human participants, and an offline
analytics CLI turns the resulting event logs into the experiment's tables.
"""

from .config import ServerConfig, default_config, load_config
from .evaluation import EvaluationContext
from .feedback import EncapsulatedFeedback, FeedbackLabel, MetricVector, Trend, encapsulate
from .model import (
    DesignBounds,
    DesignConfiguration,
    FacadeGraph,
    GridParams,
    SectionParams,
    apply_node_edit,
    generate_facade,
    shading_fraction,
    snap_to_valid,
    validate_config,
)
from .structural import LoadCase, MaterialSpec, evaluate_structure, solve_displacements

__version__ = "0.1.0"

__all__ = [
    "ServerConfig",
    "default_config",
    "load_config",
    "EvaluationContext",
    "EncapsulatedFeedback",
    "FeedbackLabel",
    "MetricVector",
    "Trend",
    "encapsulate",
    "DesignBounds",
    "DesignConfiguration",
    "FacadeGraph",
    "GridParams",
    "SectionParams",
    "apply_node_edit",
    "generate_facade",
    "shading_fraction",
    "snap_to_valid",
    "validate_config",
    "LoadCase",
    "MaterialSpec",
    "evaluate_structure",
    "solve_displacements",
    "__version__",
]
