"""Workbench for interaction networks reconstructed from phone call records.

Ingests call-detail-record logs, builds weighted interaction graphs, computes
centrality and community structure (divisive edge-removal and greedy
modularity agglomeration), supports time-windowed analysis, and exposes the
whole pipeline both as a batch CLI and as a stateful JSON session service for
interactive exploration.
"""

__version__ = "0.1.0"

from ._accel import active_backend
from .graph import BuildPolicy, InteractionGraph, build_graph, overall_metrics
from .records import CallRecord, EventType, anonymize, parse_cdr, summarize

__all__ = [
    "__version__",
    "active_backend",
    "BuildPolicy",
    "InteractionGraph",
    "build_graph",
    "overall_metrics",
    "CallRecord",
    "EventType",
    "anonymize",
    "parse_cdr",
    "summarize",
]
