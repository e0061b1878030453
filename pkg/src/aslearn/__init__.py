"""Adaptive social learning over graphs: error exponents, Perron eigenvector design and simulation."""

from .config import ExperimentConfig
from .design import EigenvectorDesign, candidate_pi, epsilon_pi, epsilon_t, optimal_design, theta_dagger
from .errors import ASLError, NumericalError, ValidationError
from .exponent import ExponentReport, c_ave, critical_t, error_exponent, exponent_bounds, m_ave, parabolic_approx
from .lmgf import Lmgf, classify_agents, lmgf_ave, noncoop_critical_t, noncoop_exponent, phi_integral
from .models import AgentModel, FinitePMF, Gaussian, HypothesisSet, Laplace, laplace_agent, noisy_gaussian_agent
from .network import Adjacency, matrix_from_eigenvector, perron_eigenvector
from .simulate import ErrorCurve, SimulationConfig, estimate_error_prob

__version__ = "0.1.0"

__all__ = [
    "ASLError", "Adjacency", "AgentModel", "EigenvectorDesign", "ErrorCurve", "ExperimentConfig",
    "ExponentReport", "FinitePMF", "Gaussian", "HypothesisSet", "Laplace", "Lmgf", "NumericalError",
    "SimulationConfig", "ValidationError", "c_ave", "candidate_pi", "classify_agents", "critical_t",
    "epsilon_pi", "epsilon_t", "error_exponent", "estimate_error_prob", "exponent_bounds", "laplace_agent",
    "lmgf_ave", "m_ave", "matrix_from_eigenvector", "noisy_gaussian_agent", "noncoop_critical_t",
    "noncoop_exponent", "optimal_design", "parabolic_approx", "perron_eigenvector", "phi_integral",
    "theta_dagger",
]
