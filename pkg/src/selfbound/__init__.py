"""Self-boundedness classification and polyhedral approximation for convex vector problems."""

from .classifier import BoundednessReport, Verdict, anchor_point, classify, estimate_recc_P, estimate_W
from .cones import PolyCone, dual_cone, weight_base
from .registry import ProblemSpec, load_problem, load_spec
from .sandwich import SandwichResult, divergence_demo, initial_outer, sandwich_solve
from .scalar import CvopProblem, SolverConfig, Status, distance_to_upper_image, solve_weighted
from .uppersets import (UpperSet, finite_dominating_subset, hausdorff, intersect,
                        is_self_bounded_set, odot, oplus)

__all__ = [
    "BoundednessReport", "CvopProblem", "PolyCone", "ProblemSpec", "SandwichResult",
    "SolverConfig", "Status", "UpperSet", "Verdict", "anchor_point", "classify",
    "distance_to_upper_image", "divergence_demo", "dual_cone", "estimate_W",
    "estimate_recc_P", "finite_dominating_subset", "hausdorff", "initial_outer",
    "intersect", "is_self_bounded_set", "load_problem", "load_spec", "odot", "oplus",
    "sandwich_solve", "solve_weighted", "weight_base",
]
