"""Magnetic geodesic, sub-Riemannian and pendulum flows on the Stiefel variety V(n,2).

Set ``STIEFEL_FLOWS_NUMBA=0`` before import to run the hot loops as plain
numpy instead of numba-compiled code.
"""

from ._jit import USE_NUMBA
from .flows import FlowSpec, PhaseVelocity, generic_field
from .integrals import casimirs, conservation_report, momentum_map, psi, thimm_chain
from .integrate import IntegratorConfig, Trajectory, integrate, project_constraints
from .manifold import CotangentState, check_on_manifold, constraint_residuals, random_state
from .metrics import ManakovData, NuKappa, QuadA, QuadB, SubRD0, SubRH
from .potentials import NoPotential, PendulumI, PendulumII

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "FlowSpec", "PhaseVelocity", "generic_field",
    "casimirs", "conservation_report", "momentum_map", "psi", "thimm_chain",
    "IntegratorConfig", "Trajectory", "integrate", "project_constraints",
    "CotangentState", "check_on_manifold", "constraint_residuals", "random_state",
    "ManakovData", "NuKappa", "QuadA", "QuadB", "SubRD0", "SubRH",
    "NoPotential", "PendulumI", "PendulumII",
]
