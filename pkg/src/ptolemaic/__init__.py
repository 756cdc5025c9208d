"""Four-point curvature conditions on finite metric spaces and a numerical
harness for flat-strip rigidity of Ptolemaic spaces."""

from .embedding import EmbeddingResult, embed, gram, symmetric_eigen
from .errors import PtolemaicError
from .formats import read_metric, write_metric
from .graph import GraphSpace, convexity_profile, grid_strip_graph, midpoints, project, shortest_paths
from .metric import (
    Condition,
    ConditionReport,
    FiniteMetricSpace,
    Quadruple,
    check_cosq,
    check_pt,
    check_qi,
    classify,
    pairing_products,
    scan,
    validate_metric,
)
from .search import Witness, canonicalize, hunt
from .spaces import Family, StripChart, StripSpec, catalog, random_metric, strip_sample

__version__ = "0.1.0"

__all__ = [
    "Condition", "ConditionReport", "EmbeddingResult", "Family", "FiniteMetricSpace", "GraphSpace",
    "PtolemaicError", "Quadruple", "StripChart", "StripSpec", "Witness", "canonicalize", "catalog",
    "check_cosq", "check_pt", "check_qi", "classify", "convexity_profile", "embed", "gram",
    "grid_strip_graph", "hunt", "midpoints", "pairing_products", "project", "random_metric",
    "read_metric", "scan", "shortest_paths", "strip_sample", "symmetric_eigen", "validate_metric",
    "write_metric",
]
