"""First integrals, Lax pairs and trajectory diagnostics for the flows on T*V(n,2)."""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .algebra import as_skew, trace_power, wedge
from .integrate import IntegratorConfig, integrate_kernel_args, uniform_spacing
from .manifold import as_array
from .metrics import QuadB, hamiltonian, to_quad_a
from .potentials import NoPotential, PendulumI, PendulumII

DEFAULT_LAMS = (0.5, 1.0, 2.0)
LAX_POWERS = (2, 4)

BRACKET_AL = "[A,L]"
BRACKET_LA = "[L,A]"


def momentum_map(s, eta):
    """Phi_eta = p1^e1 + p2^e2 + eta e1^e2, the so(n)-valued momentum of the left action."""
    a = as_array(s)
    return _kernels.momentum_matrix(a, float(eta))


def psi(s):
    """Momentum of the right SO(2) action, <e1,p2> - <e2,p1>."""
    e1, e2, p1, p2 = as_array(s)
    return float(np.dot(e1, p2) - np.dot(e2, p1))


def casimirs(phi):
    """(J1, J2) = (tr Phi^2, tr Phi^4)."""
    phi = np.asarray(phi, dtype=float)
    return float(trace_power(phi, 2)), float(trace_power(phi, 4))


def thimm_chain(phi, n=None):
    """Commuting integrals F_2 .. F_(2n-3) built from leading principal blocks of Phi.

    F_2 = Phi[0,1], F_k = tr(Phi_k^2) for k = 3..n, and F_(n+l) = tr(Phi_(3+l)^4)
    for l = 1..n-3, where Phi_k is the leading k x k block. For n >= 4 the last
    two entries are (J1, J2); for n = 3 the chain ends at J1, since
    tr(Phi^4) = (tr Phi^2)^2 / 2 there.
    """
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0] if n is None else n
    if n < 3 or phi.shape != (n, n):
        raise ValueError(f"thimm_chain needs an n x n matrix with n >= 3, got {phi.shape}")
    out = [float(phi[0, 1])]
    out += [float(trace_power(phi[:k, :k], 2)) for k in range(3, n + 1)]
    out += [float(trace_power(phi[:3 + l, :3 + l], 4)) for l in range(1, n - 2)]
    return out


def thimm_names(n):
    return ["F_2"] + [f"F_{k}" for k in range(3, 2 * n - 2)]


@dataclass(frozen=True, eq=False)
class LaxSample:
    lam: float
    L: np.ndarray
    A: np.ndarray
    order: str  # BRACKET_AL means dL/dt = [A, L]

    def bracket(self):
        if self.order == BRACKET_AL:
            return self.A @ self.L - self.L @ self.A
        return self.L @ self.A - self.A @ self.L

    def trace_power(self, k):
        """tr L^k; complex for the Grassmannian pair, real for the Stiefel pair."""
        t = complex(np.trace(np.linalg.matrix_power(self.L, k)))
        return t if t.imag != 0.0 else t.real


def lax_grassmann(s, eta, xi, lam):
    """L = lam Phi + i(e1^e2 - lam^2 Xi), A = Phi - i lam Xi, with dL/dt = [A, L]."""
    a = as_array(s)
    xi = as_skew(xi)
    if xi.shape != (a.shape[1],) * 2:
        raise ValueError(f"Xi must be {a.shape[1]}x{a.shape[1]}")
    phi = _kernels.momentum_matrix(a, float(eta))
    w = wedge(a[0], a[1])
    L = lam * phi + 1j * (w - lam * lam * xi)
    A = phi - 1j * lam * xi
    return LaxSample(float(lam), L, A, BRACKET_AL)


def _bordered(block, col1, col2, corner):
    """Skew matrix [[block, col1, col2], [-col1^T, 0, corner], [-col2^T, -corner, 0]]."""
    n = block.shape[0]
    m = np.zeros((n + 2, n + 2))
    m[:n, n] = col1
    m[:n, n + 1] = col2
    m[n, n + 1] = corner
    m -= m.T
    m[:n, :n] = block
    return m


def lax_stiefel(s, eta, pot, lam):
    """(n+2) x (n+2) real skew pair with dL/dt = [L, A], valid for kappa = 1."""
    a = as_array(s)
    n = a.shape[1]
    e1, e2 = a[0], a[1]
    if pot is None or isinstance(pot, NoPotential):
        c1 = c2 = np.zeros(n)
    elif isinstance(pot, PendulumII):
        if pot.gamma1.shape != (n,):
            raise ValueError(f"gamma vectors must have length {n}")
        c1, c2 = pot.chi1 * pot.gamma1, pot.chi2 * pot.gamma2
    else:
        raise TypeError("lax_stiefel needs a PendulumII potential or none")
    phi = _kernels.momentum_matrix(a, float(eta))
    r = psi(a) - eta

    L = _bordered(-lam * phi, e1 + lam * lam * c1, e2 + lam * lam * c2, lam * r)
    A = _bordered(-phi, lam * c1, lam * c2, r)
    return LaxSample(float(lam), L, A, BRACKET_LA)


def lax_builder(flow):
    """Return ``(name, builder)`` with ``builder(s, lam) -> LaxSample``, or None.

    The Grassmannian pair applies to natural flows with a pendulum-I or no
    potential; the Stiefel pair to natural flows with kappa = 1 and a
    pendulum-II or no potential.
    """
    from .flows import NATURAL

    if flow.family != NATURAL:
        return None
    pot, eta = flow.potential, flow.eta
    if isinstance(pot, PendulumI):
        return "grassmann", lambda s, lam: lax_grassmann(s, eta, pot.xi, lam)
    if isinstance(pot, PendulumII):
        if flow.metric.kappa != 1.0:
            return None
        return "stiefel", lambda s, lam: lax_stiefel(s, eta, pot, lam)
    if flow.metric.kappa == 1.0:
        return "stiefel", lambda s, lam: lax_stiefel(s, eta, None, lam)
    zero = np.zeros((flow.n, flow.n))
    return "grassmann", lambda s, lam: lax_grassmann(s, eta, zero, lam)


def lax_residual(traj, builder, lams=DEFAULT_LAMS):
    """Max over interior samples of |central difference of L - bracket|_F, per lambda."""
    if len(traj) < 3:
        raise ValueError("lax_residual needs at least 3 samples")
    h = uniform_spacing(traj)
    out = {}
    for lam in lams:
        samples = [builder(traj.states[i], lam) for i in range(len(traj))]
        worst = 0.0
        for i in range(1, len(samples) - 1):
            dl = (samples[i + 1].L - samples[i - 1].L) / (2 * h)
            worst = max(worst, float(np.linalg.norm(dl - samples[i].bracket())))
        out[float(lam)] = worst
    return out


def relative_drift(values):
    """max |F(t) - F(0)| / max(1, |F(0)|); complex series use the complex modulus."""
    v = np.asarray(values)
    v = v.astype(complex if np.iscomplexobj(v) else float)
    return float(np.abs(v - v[0]).max() / max(1.0, abs(v[0])))


@dataclass
class IntegralDrift:
    name: str
    drift: float
    expected_conserved: bool


@dataclass
class DiagnosticsReport:
    integrals: list = field(default_factory=list)      # IntegralDrift
    trace_powers: list = field(default_factory=list)   # IntegralDrift, names "trL^k@lam"
    lax_residuals: dict = field(default_factory=dict)  # lam -> residual
    lax_pair: str = ""
    max_constraint_residual: float = 0.0
    samples: int = 0
    extra: dict = field(default_factory=dict)

    def drift(self, name):
        for d in self.integrals + self.trace_powers:
            if d.name == name:
                return d.drift
        raise KeyError(name)

    def worst(self, expected_only=True, table="integrals"):
        rows = getattr(self, table)
        vals = [d.drift for d in rows if d.expected_conserved or not expected_only]
        return max(vals) if vals else 0.0

    def to_dict(self):
        d = asdict(self)
        d["lax_residuals"] = {repr(k): v for k, v in self.lax_residuals.items()}
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)


def integral_series(traj, flow):
    """Per-sample values of H, every Phi^{ij}, J1, J2, the Thimm chain and Psi."""
    n = traj.n
    iu = np.triu_indices(n, 1)
    series = {"H": [], "Psi": [], "J1": [], "J2": []}
    phis, chains = [], []
    for s in traj.states:
        phi = _kernels.momentum_matrix(s, float(flow.eta))
        series["H"].append(flow.hamiltonian(s, check=False))
        series["Psi"].append(psi(s))
        j1, j2 = casimirs(phi)
        series["J1"].append(j1)
        series["J2"].append(j2)
        phis.append(phi[iu])
        chains.append(thimm_chain(phi, n))
    phis = np.array(phis)
    for k, (i, j) in enumerate(zip(*iu)):
        series[f"Phi_{i + 1}{j + 1}"] = list(phis[:, k])
    for name, col in zip(thimm_names(n), np.array(chains).T):
        series[name] = list(col)
    return series


def conservation_report(traj, flow, lams=DEFAULT_LAMS, with_lax_residual=True):
    series = integral_series(traj, flow)
    free = not flow.has_potential
    rep = DiagnosticsReport(samples=len(traj), max_constraint_residual=traj.max_residual())
    for name, vals in series.items():
        if name == "H":
            expected = True
        elif name == "Psi":
            expected = flow.is_so2_symmetric()
        else:
            expected = free
        rep.integrals.append(IntegralDrift(name, relative_drift(vals), expected))

    lax = lax_builder(flow)
    if lax is not None:
        rep.lax_pair, builder = lax
        for lam in lams:
            tr = np.array([[builder(s, lam).trace_power(k) for k in LAX_POWERS] for s in traj.states])
            for col, k in enumerate(LAX_POWERS):
                rep.trace_powers.append(IntegralDrift(f"trL^{k}@{lam:g}", relative_drift(tr[:, col]), True))
        if with_lax_residual and len(traj) >= 3:
            rep.lax_residuals = lax_residual(traj, builder, lams)
    return rep


HAMILTONIANS = ("H_a", "J1", "J2")


def _observable(name, metric, eta):
    """Scalar function of a (4, n) state for the named integral."""
    if name == "H_a":
        return lambda s: hamiltonian(metric, None, s, check=False)
    if name in ("J1", "J2"):
        k = 2 if name == "J1" else 4
        return lambda s: float(trace_power(_kernels.momentum_matrix(s, eta), k))
    if name == "Psi":
        return psi
    if name.startswith("Phi_") and len(name) == 6:
        i, j = int(name[4]) - 1, int(name[5]) - 1
        return lambda s: float(_kernels.momentum_matrix(s, eta)[i, j])
    if name.startswith("F_"):
        k = int(name[2:])
        return lambda s: thimm_chain(_kernels.momentum_matrix(s, eta))[k - 2]
    raise ValueError(f"unknown integral {name!r}")


def involution_check(flow_a, observed, s0, T, h, metric=None, eta=0.0):
    """Drift of ``observed`` along the Hamiltonian flow of ``flow_a``.

    ``flow_a`` is one of "H_a", "J1", "J2"; the flow is produced by the
    multiplier solve, so no closed form is involved. ``metric`` is required
    whenever H_a is the flow or the observable.
    """
    if flow_a not in HAMILTONIANS:
        raise ValueError(f"flow_a must be one of {HAMILTONIANS}")
    if "H_a" in (flow_a, observed) and metric is None:
        raise ValueError("H_a needs a metric")
    a0 = as_array(s0)
    n = a0.shape[1]
    par = np.zeros(_kernels.NPAR)
    par[6] = eta
    if flow_a == "H_a":
        if isinstance(metric, QuadB):
            par[:6] = metric.coefficients
            par[11] = _kernels.HAM_QUADB
        else:
            par[:4] = to_quad_a(metric).coefficients
            par[11] = _kernels.HAM_QUADA
    else:
        par[11] = _kernels.HAM_J1 if flow_a == "J1" else _kernels.HAM_J2
    args = (_kernels.FIELD_GENERIC, par, np.zeros((n, n)), np.zeros((2, n)))
    traj = integrate_kernel_args(args, a0, IntegratorConfig(h=h, T=T))
    f = _observable(observed, metric, float(eta))
    return relative_drift([f(s) for s in traj.states])
