"""Coverage model, network planner and Monte Carlo simulator for single-gateway LoRaWAN cells."""
from .errors import ConvergenceError, DomainError, NumericError
from .model import (
    ExternalNetwork,
    NetworkGeometry,
    RadioParams,
    SpatialConfig,
    ThresholdSet,
    coverage_prob,
    curves,
)
from .planner import PlanRequest, maximize_nodes, maximize_range
from .specfun import hyp2f1_ring, ring_integral

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DomainError", "NumericError",
    "ExternalNetwork", "NetworkGeometry", "RadioParams", "SpatialConfig", "ThresholdSet",
    "coverage_prob", "curves", "PlanRequest", "maximize_nodes", "maximize_range",
    "hyp2f1_ring", "ring_integral",
]
