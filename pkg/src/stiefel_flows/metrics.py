"""SO(n)-invariant metric families on V(n,2) and their Hamiltonians.

Kinetic energies are quadratic forms in the momenta, with u = <p1,e2> and
v = <p2,e1>:

* ``QuadA``:  H = a1|p1|^2/2 + a2|p2|^2/2 + a3 u v + a4 <p1,p2>
* ``NuKappa``: QuadA with a = (nu, nu, -nu(1 + 2 kappa), 0)
* ``SubRH``:  QuadA on the boundary a1 + a2 = 2 a3 (contact distribution)
* ``SubRD0``: QuadA with a2 = a4 = 0 (distribution D_0)
* ``QuadB``:  the general SO(3)-invariant form, n = 3 only
"""

from dataclasses import dataclass

import numpy as np

from .manifold import as_array, check_on_manifold
from .potentials import potential_value

RIEMANNIAN = "riemannian"
SUBRIEMANNIAN_H = "subriemannian_H"
SUBRIEMANNIAN_D0 = "subriemannian_D0"
INVALID = "invalid"

_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class QuadA:
    a1: float
    a2: float
    a3: float
    a4: float

    @property
    def coefficients(self):
        return (self.a1, self.a2, self.a3, self.a4)


@dataclass(frozen=True)
class QuadB:
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float

    @property
    def coefficients(self):
        return (self.b1, self.b2, self.b3, self.b4, self.b5, self.b6)

    def matrix(self):
        """The matrix A_b with H_b = M^T A_b M / 2 in body coordinates."""
        b1, b2, b3, b4, b5, b6 = self.coefficients
        return np.array([
            [b2, -b4, -b6],
            [-b4, b1, b5],
            [-b6, b5, b3],
        ])


@dataclass(frozen=True)
class NuKappa:
    nu: float
    kappa: float


@dataclass(frozen=True)
class SubRH:
    a1: float
    a2: float
    a4: float


@dataclass(frozen=True)
class SubRD0:
    a1: float
    a3: float


@dataclass(frozen=True)
class ManakovData:
    alpha: tuple
    beta: tuple


@dataclass(frozen=True)
class Admissibility:
    kind: str
    reason: str = ""

    def __bool__(self):
        return self.kind != INVALID


def to_quad_a(m):
    """Express any non-QuadB family as QuadA coefficients."""
    if isinstance(m, QuadA):
        return m
    if isinstance(m, NuKappa):
        return QuadA(m.nu, m.nu, -m.nu * (1.0 + 2.0 * m.kappa), 0.0)
    if isinstance(m, SubRH):
        return QuadA(m.a1, m.a2, 0.5 * (m.a1 + m.a2), m.a4)
    if isinstance(m, SubRD0):
        return QuadA(m.a1, 0.0, m.a3, 0.0)
    raise TypeError(f"{type(m).__name__} has no QuadA form")


def quad_a_to_b(m):
    """QuadB coefficients reproducing H_a on T*V(3,2).

    On V(3,2), |p1|^2 = M2^2 + M3^2/4, |p2|^2 = M1^2 + M3^2/4,
    <p1,p2> = -M1 M2 and u v = -M3^2/4.
    """
    a = to_quad_a(m)
    return QuadB(a.a1, a.a2, 0.25 * (a.a1 + a.a2) - 0.5 * a.a3, a.a4, 0.0, 0.0)


def _classify_quad(a1, a2, a3, a4):
    if not (a1 > 0 and a2 > 0):
        return Admissibility(INVALID, "a1 > 0 and a2 > 0 required")
    if not a1 * a2 > a4 * a4:
        return Admissibility(INVALID, "a1 a2 > a4^2 required")
    gap = a1 + a2 - 2.0 * a3
    if abs(gap) <= _BOUNDARY_TOL * max(1.0, abs(a1) + abs(a2)):
        return Admissibility(SUBRIEMANNIAN_H)
    if gap > 0:
        return Admissibility(RIEMANNIAN)
    return Admissibility(INVALID, "a1 + a2 < 2 a3")


def check_admissible(m):
    if isinstance(m, QuadA):
        return _classify_quad(*m.coefficients)
    if isinstance(m, NuKappa):
        if m.nu <= 0:
            return Admissibility(INVALID, "nu > 0 required")
        return _classify_quad(*to_quad_a(m).coefficients)
    if isinstance(m, SubRH):
        if m.a1 > 0 and m.a2 > 0 and m.a1 * m.a2 > m.a4 ** 2:
            return Admissibility(SUBRIEMANNIAN_H)
        return Admissibility(INVALID, "a1 > 0, a2 > 0, a1 a2 > a4^2 required")
    if isinstance(m, SubRD0):
        if m.a1 > 0 and m.a1 > 2.0 * m.a3:
            return Admissibility(SUBRIEMANNIAN_D0)
        return Admissibility(INVALID, "a1 > 0 and a1 > 2 a3 required")
    if isinstance(m, QuadB):
        a = m.matrix()
        minors = [a[0, 0], np.linalg.det(a[:2, :2]), np.linalg.det(a)]
        if all(x > 0 for x in minors):
            return Admissibility(RIEMANNIAN)
        return Admissibility(INVALID, "A_b is not positive definite")
    return Admissibility(INVALID, f"unknown metric type {type(m).__name__}")


def manakov_to_params(d):
    a_1, a_2, a_3 = (float(x) for x in d.alpha)
    b_1, b_2, b_3 = (float(x) for x in d.beta)
    if a_1 == a_3 or a_2 == a_3 or a_1 == a_2:
        raise ValueError("alpha entries must be pairwise distinct")
    r13 = (b_1 - b_3) / (a_1 - a_3)
    r23 = (b_2 - b_3) / (a_2 - a_3)
    r12 = (b_1 - b_2) / (a_1 - a_2)
    if not (r13 > 0 and r23 > 0 and r12 > 0):
        raise ValueError(
            f"Manakov ratios must be positive, got {r13:.6g}, {r23:.6g}, {r12:.6g}"
        )
    return QuadA(r13, r23, 0.5 * (r13 + r23) - 2.0 * r12, 0.0)


def _kinetic(m, s):
    e1, e2, p1, p2 = s
    if isinstance(m, QuadB):
        if s.shape[1] != 3:
            raise ValueError("QuadB Hamiltonians need n = 3")
        w = np.cross(e1, e2)
        x, y = np.dot(p1, w), np.dot(p2, w)
        psi = np.dot(e1, p2) - np.dot(e2, p1)
        b1, b2, b3, b4, b5, b6 = m.coefficients
        return (0.5 * b1 * x * x + 0.5 * b2 * y * y + 0.5 * b3 * psi * psi
                + b4 * x * y + b5 * psi * x + b6 * psi * y)
    a1, a2, a3, a4 = to_quad_a(m).coefficients
    return (0.5 * a1 * np.dot(p1, p1) + 0.5 * a2 * np.dot(p2, p2)
            + a3 * np.dot(p1, e2) * np.dot(p2, e1) + a4 * np.dot(p1, p2))


def hamiltonian(m, potential, s, check=True):
    """Kinetic energy of metric ``m`` plus the optional potential, at state ``s``."""
    a = check_on_manifold(s) if check else as_array(s)
    return float(_kinetic(m, a) + potential_value(potential, a))


def lagrangian_nu_kappa(nu, kappa, e1, e2, xi):
    """Lagrangian of ds^2(nu, kappa) at a tangent vector (Legendre dual of H_{nu,kappa})."""
    if kappa <= -1.0:
        raise ValueError("the nu-kappa Lagrangian is singular for kappa <= -1")
    x1, x2 = xi.xi1, xi.xi2
    return float(
        (np.dot(x1, x1) + np.dot(x2, x2)) / (2.0 * nu)
        + (1.0 + 2.0 * kappa) / (2.0 * nu * (1.0 + kappa)) * np.dot(e1, x2) * np.dot(e2, x1)
    )


def metric_inner_nu_kappa(nu, kappa, e1, e2, xi, zeta):
    """The bilinear form of ds^2(nu, kappa) on two tangent vectors."""
    c = (1.0 + 2.0 * kappa) / (2.0 * nu * (1.0 + kappa))
    return float(
        (np.dot(xi.xi1, zeta.xi1) + np.dot(xi.xi2, zeta.xi2)) / nu
        + c * (np.dot(e1, zeta.xi2) * np.dot(e2, xi.xi1) + np.dot(e1, xi.xi2) * np.dot(e2, zeta.xi1))
    )


def random_quad_a(rng, scale=1.0):
    """Random strictly Riemannian QuadA coefficients."""
    a1, a2 = rng.uniform(0.5, 2.0, size=2) * scale
    a4 = rng.uniform(-0.8, 0.8) * np.sqrt(a1 * a2)
    a3 = 0.5 * (a1 + a2) - rng.uniform(0.2, 2.0) * scale
    return QuadA(float(a1), float(a2), float(a3), float(a4))


def random_quad_b(rng):
    """Random QuadB with a positive definite A_b."""
    g = rng.standard_normal((3, 3))
    a = g @ g.T + 0.5 * np.eye(3)
    # invert matrix(): a[0,0]=b2, a[1,1]=b1, a[2,2]=b3, a[0,1]=-b4, a[0,2]=-b6, a[1,2]=b5
    return QuadB(a[1, 1], a[0, 0], a[2, 2], -a[0, 1], a[1, 2], -a[0, 2])
