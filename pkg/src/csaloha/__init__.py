"""Coded slotted ALOHA with per-class packet loss: and-or tree analysis,
throughput optimization and a finite-population SIC simulator."""
from .degree import (
    DegreeDistribution,
    Exponential,
    Polynomial,
    expected_slot_degree,
    poisson_polynomial,
    slot_degree_distribution,
    user_degree_distribution,
)
from .density_evolution import EvolutionResult, evolve, evolve_batch, fixed_point_residual, slot_message, throughput
from .model import AccessMatrix, ConfigError, SlotClass, SystemConfig, UserClass, access_probability, validate
from .optimizer import (
    AlphaGrid,
    InfeasibleTargetError,
    OptimizationReport,
    optimize_alpha_at_eps,
    optimize_with_resolution_floor,
    resolution_floor_frontier,
    sweep_eps,
)
from .simulator import ContentionGraph, TrialOutcome, build_graph, peel, run_trials

__version__ = "0.1.0"
