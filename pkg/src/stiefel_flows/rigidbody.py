"""n = 3: V(3,2) = SO(3), Euler-Poisson gyrostats and their fourth integrals.

A state (e1, e2, p1, p2) of T*V(3,2) maps to the rotation R = (e1 e2 e1xe2)
and the body angular momentum M with hat(M) = R^T Phi_0 R, i.e.

    M1 = <p2,e3>,  M2 = -<p1,e3>,  M3 = <p1,e2> - <p2,e1>.

The magnetic term eta e1^e2 becomes the gyrostat momentum L = (0, 0, -eta).
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .algebra import vee
from .manifold import as_array, check_on_manifold
from .metrics import NuKappa, QuadB, quad_a_to_b

ZHUKOVSKIY_VOLTERRA = "zhukovskiy_volterra"
LAGRANGE = "lagrange"
KOWALEVSKI = "kowalevski"
CASES = (ZHUKOVSKIY_VOLTERRA, LAGRANGE, KOWALEVSKI)

_SHAPE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BodyState:
    M: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        for k in ("M", "Gamma"):
            v = np.array(getattr(self, k), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{k} must be a 3-vector")
            object.__setattr__(self, k, v)

    @property
    def array(self):
        return np.concatenate([self.M, self.Gamma])

    @classmethod
    def from_array(cls, y):
        return cls(y[:3], y[3:6])


@dataclass(frozen=True, eq=False)
class GyrostatParams:
    inertia: np.ndarray
    L: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        i = np.array(self.inertia, dtype=float)
        if i.shape == (3,):
            i = np.diag(i)
        if i.shape != (3, 3) or not np.allclose(i, i.T, atol=1e-14):
            raise ValueError("inertia must be 3 values or a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(i).min() <= 0:
            raise ValueError("inertia must be positive definite")
        object.__setattr__(self, "inertia", i)
        for k in ("L", "chi"):
            v = np.array(getattr(self, k), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{k} must be a 3-vector")
            object.__setattr__(self, k, v)

    @property
    def inv_inertia(self):
        return np.linalg.inv(self.inertia)

    @classmethod
    def from_b(cls, b, eta):
        """Free gyrostat of the H_b flow: I = A_b^-1, L = (0, 0, -eta)."""
        return cls(np.linalg.inv(b.matrix()), (0.0, 0.0, -eta), np.zeros(3))


@dataclass(frozen=True, eq=False)
class FrameMap:
    R: np.ndarray

    def __post_init__(self):
        r = np.array(self.R, dtype=float)
        if r.shape != (3, 3) or np.abs(r.T @ r - np.eye(3)).max() > 1e-10 or np.linalg.det(r) <= 0:
            raise ValueError("R must be a rotation matrix")
        object.__setattr__(self, "R", r)


@dataclass(frozen=True, eq=False)
class Reduction:
    frame: FrameMap
    M: np.ndarray       # body frame
    m: np.ndarray       # fixed frame, hat(m) = Phi_0
    L: np.ndarray       # gyrostat momentum, body frame
    l: np.ndarray       # gyrostat momentum, fixed frame
    Gamma: np.ndarray   # R^T gamma, or None when no axis was given


def reduce_to_so3(s, eta, gamma=None):
    a = check_on_manifold(s)
    if a.shape[1] != 3:
        raise ValueError("the SO(3) dictionary needs n = 3")
    e1, e2, p1, p2 = a
    e3 = np.cross(e1, e2)
    r = np.column_stack([e1, e2, e3])
    phi0 = _kernels.momentum_matrix(a, 0.0)
    M = np.array([np.dot(p2, e3), -np.dot(p1, e3), np.dot(p1, e2) - np.dot(p2, e1)])
    L = np.array([0.0, 0.0, -eta])
    Gamma = None if gamma is None else r.T @ np.asarray(gamma, dtype=float)
    return Reduction(FrameMap(r), M, vee(phi0), L, r @ L, Gamma)


def euler_poisson_field(params, b):
    """(dM/dt, dGamma/dt) for M' = (M+L) x Omega + Gamma x chi, Gamma' = Gamma x Omega."""
    y = _kernels.euler_poisson_rhs(b.array, params.inv_inertia, params.L, params.chi)
    return y[:3], y[3:]


def ep_shifted_field(params, K, Gamma):
    """The same system in K = M + L, where the bracket is the untranslated one."""
    K = np.asarray(K, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    omega = params.inv_inertia @ (K - params.L)
    return np.cross(K, omega) + np.cross(Gamma, params.chi), np.cross(Gamma, omega)


def body_hamiltonian(params, b):
    return float(0.5 * b.M @ params.inv_inertia @ b.M + params.chi @ b.Gamma)


def shifted_hamiltonian(params, K, Gamma):
    ii = params.inv_inertia
    return float(0.5 * K @ ii @ K - K @ ii @ params.L + params.chi @ Gamma)


def _fd_grad(F, y, h):
    g = np.empty(6)
    for i in range(6):
        d = np.zeros(6)
        d[i] = h
        g[i] = (F(y + d) - F(y - d)) / (2 * h)
    return g


def magnetic_bracket(F, G, L, b, grad_F=None, grad_G=None, h=1e-6):
    """{F,G}_L = -<M+L, F_M x G_M> - <Gamma, F_M x G_Gamma + F_Gamma x G_M>.

    ``F`` and ``G`` take a 6-vector (M, Gamma); analytic gradients returning
    6-vectors may be passed, otherwise central differences with step ``h``.
    """
    y = b.array
    gf = grad_F(y) if grad_F is not None else _fd_grad(F, y, h)
    gg = grad_G(y) if grad_G is not None else _fd_grad(G, y, h)
    fm, fg, gm, gG = gf[:3], gf[3:], gg[:3], gg[3:]
    K = b.M + np.asarray(L, dtype=float)
    return float(-K @ np.cross(fm, gm) - b.Gamma @ (np.cross(fm, gG) + np.cross(fg, gm)))


def geometric_integral(b):
    return float(b.Gamma @ b.Gamma)


def area_integral(params, b):
    return float((b.M + params.L) @ b.Gamma)


def _is_diag(i):
    return np.abs(i - np.diag(np.diag(i))).max() <= _SHAPE_TOL


def validate_case(case, params):
    i, L, chi = params.inertia, params.L, params.chi
    if case == ZHUKOVSKIY_VOLTERRA:
        if np.abs(chi).max() > _SHAPE_TOL:
            raise ValueError("Zhukovskiy-Volterra needs chi = 0")
    elif case == LAGRANGE:
        if not _is_diag(i) or abs(i[0, 0] - i[1, 1]) > _SHAPE_TOL:
            raise ValueError("Lagrange needs I = diag(I1, I1, I3)")
        if max(abs(chi[0]), abs(chi[1]), abs(L[0]), abs(L[1])) > _SHAPE_TOL:
            raise ValueError("Lagrange needs chi and L along the symmetry axis")
    elif case == KOWALEVSKI:
        if np.abs(i - np.diag([1.0, 1.0, 0.5])).max() > _SHAPE_TOL:
            raise ValueError("Kowalevski needs I = diag(1, 1, 1/2)")
        if max(abs(chi[2]), abs(L[0]), abs(L[1])) > _SHAPE_TOL:
            raise ValueError("Kowalevski needs chi in the equatorial plane and L along the axis")
    else:
        raise ValueError(f"unknown case {case!r}; expected one of {CASES}")


def _kowalevski(M, Gamma, chi1, eta):
    """The Kowalevski-gyrostat polynomial for chi = (chi1, 0, 0), L = (0, 0, eta).

    The axial momentum entering the gyrostat term is the total K3 = M3 + eta,
    so 8 eta (K3 - 2 eta) = 8 eta (M3 - eta).
    """
    m1, m2, m3 = M
    g1, g2, g3 = Gamma
    k3 = m3 + eta
    return ((m1 * m1 - m2 * m2 - 2 * chi1 * g1) ** 2
            + (2 * m1 * m2 - 2 * chi1 * g2) ** 2
            + 8 * eta * (k3 - 2 * eta) * (m1 * m1 + m2 * m2)
            - 16 * chi1 * eta * m1 * g3)


def fourth_integral(case, params, b):
    validate_case(case, params)
    if case == ZHUKOVSKIY_VOLTERRA:
        k = b.M + params.L
        return float(k @ k)
    if case == LAGRANGE:
        return float(b.M[2])
    # rotate about the symmetry axis so that chi = (|chi|, 0, 0)
    c1, c2 = params.chi[0], params.chi[1]
    r = np.hypot(c1, c2)
    if r == 0.0:
        q = np.eye(3)
    else:
        c, s = c1 / r, c2 / r
        q = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    return float(_kowalevski(q @ b.M, q @ b.Gamma, r, params.L[2]))


@dataclass(eq=False)
class BodyTrajectory:
    times: np.ndarray
    M: np.ndarray       # (N, 3)
    Gamma: np.ndarray   # (N, 3)

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return BodyState(self.M[i], self.Gamma[i])

    def write_csv(self, path, integrals=None, extra=None):
        """Columns t, M_1..M_3, Gamma_1..Gamma_3, then ``extra`` blocks, then integrals."""
        integrals = integrals or {}
        extra = extra or {}
        cols = ["t", "M_1", "M_2", "M_3", "Gamma_1", "Gamma_2", "Gamma_3"]
        for name, arr in extra.items():
            cols += [f"{name}_{j + 1}" for j in range(np.asarray(arr).reshape(len(self), -1).shape[1])]
        cols += list(integrals)
        flat = [np.asarray(a, dtype=float).reshape(len(self), -1) for a in extra.values()]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for i in range(len(self)):
                row = [self.times[i], *self.M[i], *self.Gamma[i]]
                for a in flat:
                    row += list(a[i])
                row += [integrals[k][i] for k in integrals]
                w.writerow([repr(float(x)) for x in row])


def integrate_body(params, b0, T, h, record_stride=1):
    nsteps = int(round(T / h))
    y = _kernels.integrate_body(b0.array, params.inv_inertia, params.L, params.chi,
                                h, nsteps, record_stride)
    times = np.arange(len(y)) * h * record_stride
    return BodyTrajectory(times, y[:, :3].copy(), y[:, 3:].copy())


@dataclass(eq=False)
class EquivalenceResult:
    case: str
    params: GyrostatParams
    deviation: float
    reduced: BodyTrajectory
    body: BodyTrajectory
    fourth_drift: float       # along the Euler-Poisson trajectory
    fourth_drift_reduced: float

    def summary(self):
        return {
            "case": self.case,
            "deviation": self.deviation,
            "fourth_integral_drift": self.fourth_drift,
            "fourth_integral_drift_reduced": self.fourth_drift_reduced,
        }


def dictionary_case(flow):
    """``(case, params, gamma)`` for an n = 3 flow in the SO(3) dictionary."""
    from .flows import NATURAL, RIEMANNIAN_A, SO3_QUADB
    from .potentials import NoPotential, PendulumI, PendulumII

    if flow.n != 3:
        raise ValueError("the SO(3) dictionary needs n = 3")
    pot, eta = flow.potential, flow.eta
    if isinstance(pot, NoPotential) and flow.family in (SO3_QUADB, RIEMANNIAN_A, NATURAL):
        m = flow.metric
        b = m if isinstance(m, QuadB) else quad_a_to_b(m)
        return ZHUKOVSKIY_VOLTERRA, GyrostatParams.from_b(b, eta), None
    if flow.family == NATURAL and isinstance(flow.metric, NuKappa):
        kappa = flow.metric.kappa
        inertia = np.diag([1.0, 1.0, 1.0 / (1.0 + kappa)])
        L = (0.0, 0.0, -eta)
        if isinstance(pot, PendulumI):
            # V = -<Xi e1, e2> = -<vee(Xi), e3>, so chi3 gamma = -vee(Xi)
            w = -vee(pot.xi)
            chi3 = float(np.linalg.norm(w))
            gamma = w / chi3 if chi3 > 0 else np.array([0.0, 0.0, 1.0])
            return LAGRANGE, GyrostatParams(inertia, L, (0.0, 0.0, chi3)), gamma
        if isinstance(pot, PendulumII) and kappa == 1.0:
            if np.abs(pot.gamma1 - pot.gamma2).max() > _SHAPE_TOL:
                raise ValueError("the Kowalevski dictionary needs gamma1 = gamma2")
            return KOWALEVSKI, GyrostatParams(inertia, L, (pot.chi1, pot.chi2, 0.0)), pot.gamma1
    raise ValueError("flow is outside the Zhukovskiy-Volterra, Lagrange and Kowalevski dictionary")


def reduce_trajectory(traj, eta, gamma=None):
    """Body-frame series of a stored n = 3 trajectory."""
    Ms, Gs, Rs, ms = [], [], [], []
    for s in traj.states:
        r = reduce_to_so3(s, eta, gamma)
        Ms.append(r.M)
        Gs.append(r.Gamma if r.Gamma is not None else np.full(3, np.nan))
        Rs.append(r.frame.R)
        ms.append(r.m)
    return BodyTrajectory(np.asarray(traj.times), np.array(Ms), np.array(Gs)), np.array(Rs), np.array(ms)


def equivalence_check(flow, s0, T, h, record_stride=10):
    """Integrate the Stiefel flow and the reduced Euler-Poisson system side by side.

    Returns the maximum over recorded samples of |dM| + |dGamma| (dGamma is
    omitted in the free case, where no axis exists).
    """
    from .integrate import IntegratorConfig, integrate

    case, params, gamma = dictionary_case(flow)
    a0 = as_array(s0)
    traj = integrate(flow, a0, IntegratorConfig(h=h, T=T, record_stride=record_stride))
    reduced, _, _ = reduce_trajectory(traj, flow.eta, gamma)
    g0 = reduced.Gamma[0] if gamma is not None else np.array([0.0, 0.0, 1.0])
    body = integrate_body(params, BodyState(reduced.M[0], g0), T, h, record_stride)
    dev = np.linalg.norm(reduced.M - body.M, axis=1)
    if gamma is not None:
        dev = dev + np.linalg.norm(reduced.Gamma - body.Gamma, axis=1)

    def drift(bt):
        f = np.array([fourth_integral(case, params, BodyState(bt.M[i], bt.Gamma[i]))
                      for i in range(len(bt))])
        return float(np.abs(f - f[0]).max() / max(1.0, abs(f[0])))

    return EquivalenceResult(case, params, float(dev.max()), reduced, body, drift(body), drift(reduced))


__all__ = [
    "BodyState", "GyrostatParams", "FrameMap", "Reduction", "BodyTrajectory", "EquivalenceResult",
    "ZHUKOVSKIY_VOLTERRA", "LAGRANGE", "KOWALEVSKI", "CASES",
    "reduce_to_so3", "euler_poisson_field", "ep_shifted_field", "body_hamiltonian",
    "shifted_hamiltonian", "magnetic_bracket", "geometric_integral", "area_integral",
    "fourth_integral", "validate_case", "integrate_body", "dictionary_case",
    "reduce_trajectory", "equivalence_check",
]
