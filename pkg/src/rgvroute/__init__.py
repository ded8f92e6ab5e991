"""Energy-aware routing for a two-sided rail-guided vehicle on a linear track."""
from .instance import Instance, Request, RequestType, Side, classify, queue_relations, vertex_distance
from .kinematics import RgvParams, arc_energy, travel_time
from .deck import DeckState, RouteEvaluation, Violation, deck_apply, evaluate_route, pairwise_case

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "Request",
    "RequestType",
    "Side",
    "classify",
    "queue_relations",
    "vertex_distance",
    "RgvParams",
    "arc_energy",
    "travel_time",
    "DeckState",
    "RouteEvaluation",
    "Violation",
    "deck_apply",
    "evaluate_route",
    "pairwise_case",
]
