"""Particle simulation of a McKean-Vlasov equation with hitting-time feedback.

The loss ``L_t`` is the probability that ``Y`` has reached 0 by time ``t``,
and every particle is pushed down by ``alpha * L_t``.
"""

from .analysis import (
    ConvergenceReport,
    DensityEstimate,
    check_density_bound,
    detect_jump,
    fit_order,
    kde_density,
    loss_derivative,
    metric_d1,
    metric_d2,
    metric_d3,
)
from .model import (
    Dirac,
    GammaLaw,
    ModelParams,
    ReciprocalExp,
    TheoryConstants,
    TimeMesh,
    build_refined_mesh,
    build_uniform_mesh,
)
from .scheme import LossCurve, ParticleState, loss_at, simulate, simulate_bridge, simulate_nested, simulate_plain
from .stochastic import BrownianStream, PathEnsemble, coarsen, make_ensemble, sample_increments, sample_initial
from .theory import check_extension_condition, solve_T_star

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport",
    "DensityEstimate",
    "Dirac",
    "GammaLaw",
    "LossCurve",
    "ModelParams",
    "ParticleState",
    "PathEnsemble",
    "ReciprocalExp",
    "TheoryConstants",
    "TimeMesh",
    "build_refined_mesh",
    "build_uniform_mesh",
    "check_density_bound",
    "check_extension_condition",
    "coarsen",
    "detect_jump",
    "fit_order",
    "kde_density",
    "loss_at",
    "loss_derivative",
    "make_ensemble",
    "metric_d1",
    "metric_d2",
    "metric_d3",
    "sample_increments",
    "sample_initial",
    "simulate",
    "simulate_bridge",
    "simulate_plain",
    "simulate_nested",
    "BrownianStream",
    "solve_T_star",
]
