"""Hamiltonian vector fields on T*V(n,2) with the twisted symplectic form.

The twisted form is dp1^de1 + dp2^de2 + eta de1^de2. Closed-form fields
exist for the QuadA, sub-Riemannian and natural families; :func:`generic_field`
recovers any field by solving for the six Lagrange multipliers, and is the
only route for QuadB (n = 3) and for the Casimir flows.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .manifold import as_array, check_on_manifold
from .metrics import (
    INVALID,
    RIEMANNIAN,
    SUBRIEMANNIAN_D0,
    SUBRIEMANNIAN_H,
    NuKappa,
    QuadA,
    QuadB,
    SubRD0,
    SubRH,
    check_admissible,
    hamiltonian,
    to_quad_a,
)
from .potentials import NoPotential, PendulumI, PendulumII, kernel_arrays

__all__ = [
    "NoPotential", "PendulumI", "PendulumII",
    "PhaseVelocity", "FlowSpec", "SingularMultiplierError",
    "riemannian_field", "subr_h_field", "subr_d0_field", "natural_field",
    "generic_field", "so3_quadb_field", "fd_gradient", "hamiltonian_gradient",
    "FAMILIES",
]

RIEMANNIAN_A = "riemannian"
SO3_QUADB = "so3_quadb"
SUBR_H = "subr_h"
SUBR_D0 = "subr_d0"
NATURAL = "natural"
FAMILIES = (RIEMANNIAN_A, SO3_QUADB, SUBR_H, SUBR_D0, NATURAL)

COND_LIMIT = 1e12


class SingularMultiplierError(ArithmeticError):
    def __init__(self, cond):
        super().__init__(f"multiplier system is singular (condition number {cond:.3e})")
        self.cond = cond


@dataclass(frozen=True, eq=False)
class PhaseVelocity:
    de1: np.ndarray
    de2: np.ndarray
    dp1: np.ndarray
    dp2: np.ndarray
    multipliers: tuple  # (lambda11, lambda12, lambda22, mu11, mu12, mu22)

    @property
    def array(self):
        return np.vstack([self.de1, self.de2, self.dp1, self.dp2])

    @classmethod
    def from_arrays(cls, v, mult):
        return cls(v[0].copy(), v[1].copy(), v[2].copy(), v[3].copy(),
                   tuple(float(x) for x in mult))

    def constraint_rates(self, s):
        return _kernels.constraint_rates(as_array(s), self.array)


def _par(coeffs, eta, kappa=0.0, ham_code=_kernels.HAM_QUADA):
    par = np.zeros(_kernels.NPAR)
    par[:len(coeffs)] = coeffs
    par[6] = eta
    par[10] = kappa
    par[11] = ham_code
    return par


def _run(code, s, par, xi, gam):
    out = np.empty_like(s)
    mult = np.empty(6)
    _kernels.field(code, s, par, xi, gam, out, mult)
    return PhaseVelocity.from_arrays(out, mult)


def _empty_potential(n):
    return np.zeros((n, n)), np.zeros((2, n))


def _require(m, kinds, what):
    got = check_admissible(m)
    if got.kind not in kinds:
        detail = got.reason or got.kind
        raise ValueError(f"{what} needs a {' or '.join(kinds)} metric: {detail}")


def riemannian_field(m, eta, s):
    """Closed-form magnetic geodesic field of H_a."""
    _require(m, (RIEMANNIAN,), "riemannian_field")
    a = check_on_manifold(s)
    return _run(_kernels.FIELD_RIEMANNIAN, a, _par(to_quad_a(m).coefficients, eta),
                *_empty_potential(a.shape[1]))


def subr_h_field(m, eta, s):
    """Magnetic normal sub-Riemannian field on the contact distribution."""
    if not isinstance(m, SubRH):
        raise TypeError("subr_h_field expects SubRH parameters")
    _require(m, (SUBRIEMANNIAN_H,), "subr_h_field")
    a = check_on_manifold(s)
    return _run(_kernels.FIELD_SUBR_H, a, _par(to_quad_a(m).coefficients, eta),
                *_empty_potential(a.shape[1]))


def subr_d0_field(m, eta, s):
    """Magnetic normal sub-Riemannian field on the distribution D_0."""
    if not isinstance(m, SubRD0):
        raise TypeError("subr_d0_field expects SubRD0 parameters")
    _require(m, (SUBRIEMANNIAN_D0,), "subr_d0_field")
    a = check_on_manifold(s)
    return _run(_kernels.FIELD_SUBR_D0, a, _par(to_quad_a(m).coefficients, eta),
                *_empty_potential(a.shape[1]))


def natural_field(kappa, eta, potential, s):
    """Natural system with kinetic energy of ds^2(1, kappa) and a potential."""
    if kappa <= -1.0:
        raise ValueError("natural flows need kappa > -1")
    a = check_on_manifold(s)
    kind, chi, xi, gam = kernel_arrays(potential, a.shape[1])
    par = _par(to_quad_a(NuKappa(1.0, kappa)).coefficients, eta, kappa)
    par[7] = kind
    par[8], par[9] = chi
    return _run(_kernels.FIELD_NATURAL, a, par, xi, gam)


def fd_gradient(H, s, h=1e-6):
    """Central-difference gradient of a scalar function on R^(4n)."""
    a = as_array(s)
    g = np.empty_like(a)
    for idx in np.ndindex(a.shape):
        x = a.copy()
        x[idx] += h
        fp = H(x)
        x[idx] -= 2 * h
        fm = H(x)
        g[idx] = (fp - fm) / (2 * h)
    return g


def generic_field(H, eta, s, grad=None, h_g=1e-6):
    """Solve the multiplier system for the restriction of ``H`` to T*V(n,2).

    ``H`` takes a ``(4, n)`` array; ``grad`` (same signature, returning the
    ``(4, n)`` gradient) is used when given, otherwise central differences.
    """
    a = as_array(s)
    g = grad(a) if grad is not None else fd_gradient(H, a, h_g)
    g = np.ascontiguousarray(g, dtype=float)
    mat, rhs = _kernels.multiplier_system(a, g, float(eta))
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMultiplierError(cond)
    u = np.linalg.solve(mat, rhs)
    out = np.empty_like(a)
    _kernels.twisted_rhs(a, g, float(eta), u, out)
    return PhaseVelocity.from_arrays(out, (u[3], u[4], u[5], u[0], u[1], u[2]))


def hamiltonian_gradient(m, potential, s):
    """Analytic gradient rows (dH/de1, dH/de2, dH/dp1, dH/dp2)."""
    a = as_array(s)
    n = a.shape[1]
    if isinstance(m, QuadB):
        return _kernels.quad_b_gradient(a, _par(m.coefficients, 0.0))
    kind, chi, xi, gam = kernel_arrays(potential, n)
    par = _par(to_quad_a(m).coefficients, 0.0)
    par[7] = kind
    par[8], par[9] = chi
    return _kernels.quad_a_gradient(a, par, xi, gam)


def so3_quadb_field(b, eta, s):
    """Field of the general SO(3)-invariant Hamiltonian H_b via the multiplier solve."""
    a = check_on_manifold(s)
    if a.shape[1] != 3:
        raise ValueError("QuadB flows need n = 3")
    _require(b, (RIEMANNIAN,), "so3_quadb_field")
    return generic_field(lambda x: hamiltonian(b, None, x, check=False), eta, a,
                         grad=lambda x: hamiltonian_gradient(b, None, x))


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A concrete flow: family, metric, magnetic strength and potential."""

    family: str
    metric: object
    eta: float = 0.0
    potential: object = dc_field(default_factory=NoPotential)
    n: int = 4

    def __post_init__(self):
        if self.potential is None:
            object.__setattr__(self, "potential", NoPotential())
        if self.family not in FAMILIES:
            raise ValueError(f"unknown flow family {self.family!r}")
        if self.n < 3:
            raise ValueError("n must be >= 3")
        m = self.metric
        adm = check_admissible(m)
        if adm.kind == INVALID:
            raise ValueError(f"inadmissible metric: {adm.reason}")
        expected = {
            RIEMANNIAN_A: ((QuadA, NuKappa), RIEMANNIAN),
            SO3_QUADB: ((QuadB,), RIEMANNIAN),
            SUBR_H: ((SubRH,), SUBRIEMANNIAN_H),
            SUBR_D0: ((SubRD0,), SUBRIEMANNIAN_D0),
            NATURAL: ((NuKappa,), RIEMANNIAN),
        }[self.family]
        if not isinstance(m, expected[0]) or adm.kind != expected[1]:
            raise ValueError(f"metric {m!r} does not fit family {self.family!r}")
        if self.family == SO3_QUADB and self.n != 3:
            raise ValueError("so3_quadb requires n = 3")
        if self.family == NATURAL:
            if m.nu != 1.0:
                raise ValueError("natural flows fix nu = 1")
        elif not isinstance(self.potential, NoPotential):
            raise ValueError(f"family {self.family!r} takes no potential")
        kernel_arrays(self.potential, self.n)  # shape validation

    @property
    def has_potential(self):
        return not isinstance(self.potential, NoPotential)

    @property
    def kappa(self):
        return self.metric.kappa if isinstance(self.metric, NuKappa) else None

    def kernel_args(self, closed_form=True):
        """``(field_code, par, xi, gam)`` for the numba kernels."""
        kind, chi, xi, gam = kernel_arrays(self.potential, self.n)
        if self.family == SO3_QUADB:
            par = _par(self.metric.coefficients, self.eta, ham_code=_kernels.HAM_QUADB)
            return _kernels.FIELD_GENERIC, par, xi, gam
        kappa = self.metric.kappa if self.family == NATURAL else 0.0
        par = _par(to_quad_a(self.metric).coefficients, self.eta, kappa)
        par[7] = kind
        par[8], par[9] = chi
        if not closed_form:
            return _kernels.FIELD_GENERIC, par, xi, gam
        code = {
            RIEMANNIAN_A: _kernels.FIELD_RIEMANNIAN,
            SUBR_H: _kernels.FIELD_SUBR_H,
            SUBR_D0: _kernels.FIELD_SUBR_D0,
            NATURAL: _kernels.FIELD_NATURAL,
        }[self.family]
        return code, par, xi, gam

    def field(self, s, closed_form=True):
        a = check_on_manifold(s)
        if a.shape[1] != self.n:
            raise ValueError(f"state has n = {a.shape[1]}, flow expects {self.n}")
        code, par, xi, gam = self.kernel_args(closed_form)
        return _run(code, a, par, xi, gam)

    def hamiltonian(self, s, check=True):
        return hamiltonian(self.metric, self.potential, s, check=check)

    def is_so2_symmetric(self):
        """Whether Psi is a Noether integral of this flow."""
        if isinstance(self.potential, PendulumII):
            return False
        if isinstance(self.metric, NuKappa):
            return True
        if isinstance(self.metric, QuadA):
            return self.metric.a1 == self.metric.a2 and self.metric.a4 == 0.0
        if isinstance(self.metric, SubRH):
            return self.metric.a1 == self.metric.a2 and self.metric.a4 == 0.0
        if isinstance(self.metric, QuadB):
            b = self.metric
            return b.b1 == b.b2 and b.b4 == 0.0 and b.b5 == 0.0 and b.b6 == 0.0
        return False
