"""Long-range percolation on finite boxes: sampling, graph distances,
hierarchical block analysis and numeric checks of the distance bounds."""
from __future__ import annotations

from .errors import (CapacityError, ConstraintViolation, DomainError, FormatError,
                     IntegrityError, LRPError, PreconditionError, VersionMismatch)
from .model import (ConnectivityKernel, ModelParams, ScaleSchedule, build_schedule,
                    delta_exponent, delta_prime, demo_schedule, kernel_probability)
from .sampler import GraphSample, expected_edge_count, sample_graph
from .graphio import load_graph, save_graph
from .metrics import (ball_growth, bfs_distances, diameter_exact, graph_distance,
                      typical_distance_sample)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "ConstraintViolation", "DomainError", "FormatError", "IntegrityError",
    "LRPError", "PreconditionError", "VersionMismatch",
    "ConnectivityKernel", "ModelParams", "ScaleSchedule", "build_schedule", "delta_exponent",
    "delta_prime", "demo_schedule", "kernel_probability",
    "GraphSample", "expected_edge_count", "sample_graph", "load_graph", "save_graph",
    "ball_growth", "bfs_distances", "diameter_exact", "graph_distance",
    "typical_distance_sample",
]
