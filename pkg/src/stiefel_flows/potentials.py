"""Potential energies on V(n,2) used by the natural (pendulum-type) flows."""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .algebra import as_skew, hat


@dataclass(frozen=True)
class NoPotential:
    kind = _kernels.POT_NONE


@dataclass(frozen=True, eq=False)
class PendulumI:
    """V = <e1 ^ e2, Xi> = -<Xi e1, e2>, pulled back from the Grassmannian."""

    xi: np.ndarray
    kind = _kernels.POT_XI

    def __post_init__(self):
        object.__setattr__(self, "xi", as_skew(self.xi))

    @classmethod
    def from_axis(cls, gamma, chi3):
        """n = 3 potential V = chi3 <gamma, e1 x e2> for a unit axis gamma.

        Since -<hat(g) e1, e2> = -<g, e1 x e2>, this needs Xi = -chi3 hat(gamma).
        """
        gamma = np.asarray(gamma, dtype=float)
        if abs(np.linalg.norm(gamma) - 1.0) > 1e-12:
            raise ValueError("gamma must be a unit vector")
        return cls(-chi3 * hat(gamma))


@dataclass(frozen=True, eq=False)
class PendulumII:
    """V = chi1 <gamma1, e1> + chi2 <gamma2, e2>."""

    gamma1: np.ndarray
    gamma2: np.ndarray
    chi1: float
    chi2: float
    kind = _kernels.POT_GAMMA

    def __post_init__(self):
        for name in ("gamma1", "gamma2"):
            g = np.array(getattr(self, name), dtype=float)
            if g.ndim != 1 or abs(np.linalg.norm(g) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
            g.setflags(write=False)
            object.__setattr__(self, name, g)
        if self.gamma1.shape != self.gamma2.shape:
            raise ValueError("gamma1 and gamma2 must have the same length")
        object.__setattr__(self, "chi1", float(self.chi1))
        object.__setattr__(self, "chi2", float(self.chi2))


def kernel_arrays(potential, n):
    """``(par_update, xi, gam)`` in the layout of :mod:`stiefel_flows._kernels`."""
    xi = np.zeros((n, n))
    gam = np.zeros((2, n))
    chi = (0.0, 0.0)
    if potential is None:
        potential = NoPotential()
    if isinstance(potential, PendulumI):
        if potential.xi.shape != (n, n):
            raise ValueError(f"Xi must be {n}x{n}, got {potential.xi.shape}")
        xi = np.ascontiguousarray(potential.xi)
    elif isinstance(potential, PendulumII):
        if potential.gamma1.shape != (n,):
            raise ValueError(f"gamma vectors must have length {n}")
        gam = np.ascontiguousarray(np.vstack([potential.gamma1, potential.gamma2]))
        chi = (potential.chi1, potential.chi2)
    return potential.kind, chi, xi, gam


def potential_value(potential, s_array):
    if potential is None or isinstance(potential, NoPotential):
        return 0.0
    n = s_array.shape[1]
    kind, chi, xi, gam = kernel_arrays(potential, n)
    par = np.zeros(_kernels.NPAR)
    par[7] = kind
    par[8], par[9] = chi
    return float(_kernels.potential_value(s_array, par, xi, gam))
