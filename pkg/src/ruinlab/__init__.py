"""Exact and simulated analysis of the multi-player gambler's ruin on the lattice simplex."""

__version__ = "0.1.0"

from ._validation import ConvergenceError, ValidationError
from .absorption import AbsorptionRow, RuinChain, absorption_row, conditional_final_distribution, face_hit_probability
from .analysis import FitResult, PowerLawRegressor, RatioReport, fit_power_law, ratio_report, successive_exponents
from .kernel import KernelOperator, apply, build_killed_kernel, exit_distribution
from .montecarlo import McStats, estimate_face_probability, simulate
from .profile import BETA, ProfileConstants, alpha_from_lambda, hitting_estimate
from .simplex import ChipConfig, SimplexIndex, center_state, enumerate_interior, neighbors
from .spectral import EigenPair, PerronFrobeniusSolver, perron_frobenius, spectral_gap_scan
from .sphereig import (
    DirichletEigensolver,
    EigenSolution,
    SphericalTriangle,
    derive_alpha,
    dirichlet_lambda,
    octant_triangle,
    tetrahedral_triangle,
)

__all__ = [
    "AbsorptionRow",
    "BETA",
    "ChipConfig",
    "ConvergenceError",
    "DirichletEigensolver",
    "EigenPair",
    "EigenSolution",
    "FitResult",
    "KernelOperator",
    "McStats",
    "PerronFrobeniusSolver",
    "PowerLawRegressor",
    "ProfileConstants",
    "RatioReport",
    "RuinChain",
    "SimplexIndex",
    "SphericalTriangle",
    "ValidationError",
    "absorption_row",
    "alpha_from_lambda",
    "apply",
    "build_killed_kernel",
    "center_state",
    "conditional_final_distribution",
    "derive_alpha",
    "dirichlet_lambda",
    "enumerate_interior",
    "estimate_face_probability",
    "exit_distribution",
    "face_hit_probability",
    "fit_power_law",
    "hitting_estimate",
    "neighbors",
    "octant_triangle",
    "perron_frobenius",
    "ratio_report",
    "simulate",
    "spectral_gap_scan",
    "successive_exponents",
    "tetrahedral_triangle",
]
