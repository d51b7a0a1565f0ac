"""Dynamic combinatorial optimization on graph snapshot sequences."""

from .graph import (
    DynamicInstance,
    GraphSnapshot,
    Metric,
    Problem,
    TemporalEdgeList,
    TspNodeSet,
)

__all__ = [
    "DynamicInstance",
    "GraphSnapshot",
    "Metric",
    "Problem",
    "TemporalEdgeList",
    "TspNodeSet",
]

__version__ = "0.1.0"
