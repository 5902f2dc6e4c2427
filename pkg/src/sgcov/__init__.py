"""Coverage, interference and spectral efficiency of finite and clustered
Poisson networks, with a Monte Carlo simulator to check them against."""

__version__ = "0.1.0"

from .geometry import DomainError, area, area_derivative, intersection_area, intersection_area_derivative
from .quadrature import IntegrationError, KernelConvergenceError, QuadratureSettings, kernel_F
from .scenario import Kind, Scenario, analytic_coverage, analytic_lower_bound, analytic_spectral_efficiency
from .single_cluster import ChannelModel, SingleClusterGeometry, Strategy
from .multi_cluster import AccessMode, MultiClusterParams, contact_cdf, contact_pdf
from .montecarlo import SimConfig, simulate

__all__ = [
    "AccessMode", "ChannelModel", "DomainError", "IntegrationError", "Kind", "KernelConvergenceError",
    "MultiClusterParams", "QuadratureSettings", "Scenario", "SimConfig", "SingleClusterGeometry",
    "Strategy", "analytic_coverage", "analytic_lower_bound", "analytic_spectral_efficiency", "area",
    "area_derivative", "contact_cdf", "contact_pdf", "intersection_area", "intersection_area_derivative",
    "kernel_F", "simulate",
]
