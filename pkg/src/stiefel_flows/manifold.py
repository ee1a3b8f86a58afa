"""The Stiefel variety V(n,2), its cotangent bundle inside R^(4n), and the contact structure.

Points of T*V(n,2) are :class:`CotangentState` values satisfying

    <e1,e1> = 1, <e2,e2> = 1, <e1,e2> = 0,
    <e1,p1> = 0, <e2,p2> = 0, <e1,p2> + <e2,p1> = 0.

Query functions reject off-manifold input; only
:func:`stiefel_flows.integrate.project_constraints` moves a point back.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .algebra import MAX_DIM, wedge

TOL_C = 1e-10


class OffManifoldError(ValueError):
    """Raised when a state violates the constraints beyond tolerance."""


@dataclass(frozen=True, eq=False)
class CotangentState:
    e1: np.ndarray
    e2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        vecs = [np.array(getattr(self, k), dtype=float) for k in ("e1", "e2", "p1", "p2")]
        n = vecs[0].shape
        if len(n) != 1 or any(v.shape != n for v in vecs):
            raise ValueError("e1, e2, p1, p2 must be vectors of equal length")
        if not 3 <= n[0] <= MAX_DIM:
            raise ValueError(f"n must lie in [3, {MAX_DIM}], got {n[0]}")
        for k, v in zip(("e1", "e2", "p1", "p2"), vecs):
            v.setflags(write=False)
            object.__setattr__(self, k, v)

    @property
    def n(self):
        return self.e1.shape[0]

    @property
    def array(self):
        """The state as a fresh C-contiguous ``(4, n)`` array."""
        return np.vstack([self.e1, self.e2, self.p1, self.p2])

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(a[0], a[1], a[2], a[3])

    def __repr__(self):
        return f"CotangentState(n={self.n}, e1={self.e1}, e2={self.e2}, p1={self.p1}, p2={self.p2})"


@dataclass(frozen=True)
class TangentVector:
    xi1: np.ndarray
    xi2: np.ndarray


@dataclass(frozen=True)
class ConstraintResidual:
    f11: float
    f22: float
    f12: float
    g11: float
    g22: float
    g12: float

    def max_abs(self):
        return max(abs(x) for x in self.as_tuple())

    def as_tuple(self):
        return (self.f11, self.f22, self.f12, self.g11, self.g22, self.g12)


RESIDUAL_NAMES = ("f11", "f22", "f12", "g11", "g22", "g12")


def as_array(s):
    """Accept a :class:`CotangentState` or a ``(4, n)`` array."""
    if isinstance(s, CotangentState):
        return s.array
    a = np.ascontiguousarray(s, dtype=float)
    if a.ndim != 2 or a.shape[0] != 4:
        raise ValueError(f"expected a (4, n) state array, got shape {a.shape}")
    return a


def constraint_residuals(s):
    return ConstraintResidual(*(float(x) for x in _kernels.constraint_residuals(as_array(s))))


def check_on_manifold(s, tol=TOL_C, config_only=False):
    a = as_array(s)
    r = _kernels.constraint_residuals(a)
    if config_only:
        r = r[:3]
    worst = np.abs(r).max()
    if worst > tol:
        raise OffManifoldError(f"state violates constraints by {worst:.3e} (tol {tol:.1e})")
    return a


def is_tangent(e1, e2, xi, tol=TOL_C):
    return (
        abs(np.dot(e1, xi.xi1)) <= tol
        and abs(np.dot(e2, xi.xi2)) <= tol
        and abs(np.dot(e1, xi.xi2) + np.dot(xi.xi1, e2)) <= tol
    )


def contact_form(e1, e2, xi):
    """alpha = -e2 . de1 evaluated on a tangent vector."""
    return -float(np.dot(e2, xi.xi1))


def magnetic_pairing(e1, e2, xi, zeta):
    """de1 ^ de2 evaluated on two tangent vectors.

    Only used to check that the Reeb field spans its kernel; the flows carry
    the magnetic term through eta directly.
    """
    return float(np.dot(xi.xi1, zeta.xi2) - np.dot(zeta.xi1, xi.xi2))


def reeb_field(e1, e2, tol=TOL_C):
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    f = np.array([np.dot(e1, e1) - 1.0, np.dot(e2, e2) - 1.0, np.dot(e1, e2)])
    if np.abs(f).max() > tol:
        raise OffManifoldError(f"(e1, e2) is not orthonormal (residual {np.abs(f).max():.3e})")
    return TangentVector(-e2, e1.copy())


def rotate_so2(s, theta):
    """Rotate the frame (e1, e2) and the momenta (p1, p2) by theta in their plane."""
    c, sn = np.cos(theta), np.sin(theta)
    return CotangentState(
        c * s.e1 + sn * s.e2,
        -sn * s.e1 + c * s.e2,
        c * s.p1 + sn * s.p2,
        -sn * s.p1 + c * s.p2,
    )


def grassmann_project(e1, e2, tol=TOL_C):
    """Submersion onto the oriented Grassmannian, (e1, e2) -> e1 ^ e2."""
    reeb_field(e1, e2, tol)  # validates
    return wedge(e1, e2)


def random_state(n, seed=None, momentum_scale=1.0, max_retries=100):
    """Pseudo-random point of T*V(n,2), deterministic in ``seed``."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        a = rng.standard_normal((2, n))
        b = rng.standard_normal((2, n)) * momentum_scale
        n1 = np.linalg.norm(a[0])
        if n1 < 1e-8:
            continue
        e1 = a[0] / n1
        w = a[1] - np.dot(a[1], e1) * e1
        n2 = np.linalg.norm(w)
        if n2 < 1e-8:
            continue
        e2 = w / n2
        s11 = np.dot(e1, b[0])
        s22 = np.dot(e2, b[1])
        s12 = 0.5 * (np.dot(e1, b[1]) + np.dot(e2, b[0]))
        p1 = b[0] - s11 * e1 - s12 * e2
        p2 = b[1] - s12 * e1 - s22 * e2
        return CotangentState(e1, e2, p1, p2)
    raise RuntimeError(f"degenerate random draws in {max_retries} attempts")


def random_rotation(n, rng):
    """Haar-random element of SO(n)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotate_left(s, r):
    """Left SO(n) action (X, P) -> (RX, RP)."""
    return CotangentState(r @ s.e1, r @ s.e2, r @ s.p1, r @ s.p2)
