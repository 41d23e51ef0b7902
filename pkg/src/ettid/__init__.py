"""Identification of effects of treatment on the treated in causal diagrams."""

from .graph import Admg, GraphError, parse_graph, format_graph

__version__ = "0.1.0"
__all__ = ["Admg", "GraphError", "parse_graph", "format_graph"]
