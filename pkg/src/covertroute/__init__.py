"""Covert multi-hop routing over multi-modality wireless networks."""

from .channel_model import (
    GainTable,
    Modality,
    NodeDef,
    Obstacle,
    Scenario,
    build_gain_table,
    load_gain_table,
    load_scenario,
    save_gain_table,
    segment_obstruction_count,
)
from .covert_metrics import (
    DetectionParams,
    Hop,
    Route,
    hop_dep,
    hop_throughput,
    md_fa_probabilities,
    monte_carlo_dep,
    optimal_threshold,
    regularized_lower_gamma,
    route_dep,
    route_throughput,
)
from .oracle_routing import (
    RouteResult,
    best_direction_to_destination,
    brute_force_optimal,
    closest_to_destination,
    dijkstra_optimal,
)
from .q_routing import (
    LearningConfig,
    extract_route,
    train,
)
from .topology import (
    Action,
    action_space,
    feasibility_graph,
    neighbor_set,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "DetectionParams",
    "GainTable",
    "Hop",
    "LearningConfig",
    "Modality",
    "NodeDef",
    "Obstacle",
    "Route",
    "RouteResult",
    "Scenario",
    "action_space",
    "best_direction_to_destination",
    "brute_force_optimal",
    "build_gain_table",
    "closest_to_destination",
    "dijkstra_optimal",
    "extract_route",
    "feasibility_graph",
    "hop_dep",
    "hop_throughput",
    "load_gain_table",
    "load_scenario",
    "md_fa_probabilities",
    "monte_carlo_dep",
    "neighbor_set",
    "optimal_threshold",
    "regularized_lower_gamma",
    "route_dep",
    "route_throughput",
    "save_gain_table",
    "segment_obstruction_count",
    "train",
]
