"""RK4 time stepping in the ambient R^(4n) with projection back onto T*V(n,2)."""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .manifold import RESIDUAL_NAMES, CotangentState, as_array, check_on_manifold

ABORT_TOL = 1e-6


class IntegrationAbort(RuntimeError):
    """Constraint drift before projection exceeded the abort threshold, or Newton failed."""

    def __init__(self, message, trajectory=None, step=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.step = step


class ProjectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    T: float = 10.0
    projection_interval: int = 1
    newton_tol: float = 1e-12
    newton_max_iter: int = 10
    record_stride: int = 1
    adaptive: bool = False
    rtol: float = 1e-10

    def __post_init__(self):
        if not (self.h > 0 and self.T > 0):
            raise ValueError("h and T must be positive")
        if self.newton_tol <= 0 or self.rtol <= 0:
            raise ValueError("tolerances must be positive")
        if self.projection_interval < 1 or self.record_stride < 1 or self.newton_max_iter < 1:
            raise ValueError("projection_interval, record_stride and newton_max_iter must be >= 1")

    @property
    def nsteps(self):
        return int(round(self.T / self.h))


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray       # (N,)
    states: np.ndarray      # (N, 4, n)
    residuals: np.ndarray   # (N, 6)

    def __len__(self):
        return len(self.times)

    @property
    def n(self):
        return self.states.shape[2]

    def state(self, i):
        return CotangentState.from_array(self.states[i])

    def max_residual(self):
        return float(np.abs(self.residuals).max())

    @classmethod
    def from_states(cls, times, states):
        states = np.asarray(states, dtype=float)
        res = np.array([_kernels.constraint_residuals(np.ascontiguousarray(s)) for s in states])
        return cls(np.asarray(times, dtype=float), states, res.reshape(len(states), 6))

    def csv_header(self, integral_names=()):
        n = self.n
        cols = ["t"]
        for block in ("e1", "e2", "p1", "p2"):
            cols += [f"{block}_{i + 1}" for i in range(n)]
        cols += [f"res_{r}" for r in RESIDUAL_NAMES]
        cols += list(integral_names)
        return cols

    def write_csv(self, path, integrals=None):
        """One row per sample; ``integrals`` maps column name -> per-sample values."""
        integrals = integrals or {}
        names = list(integrals)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.csv_header(names))
            for i in range(len(self)):
                row = [self.times[i], *self.states[i].ravel(), *self.residuals[i]]
                row += [integrals[k][i] for k in names]
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        n = sum(1 for c in header if c.startswith("e1_"))
        if n == 0:
            raise ValueError(f"{path}: no e1_* columns in header")
        data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), -1)
        states = data[:, 1:1 + 4 * n].reshape(-1, 4, n)
        res = data[:, 1 + 4 * n:1 + 4 * n + 6]
        return cls(data[:, 0].copy(), np.ascontiguousarray(states), res.copy())


def project_constraints(s_raw, newton_tol=1e-12, newton_max_iter=10, basin=5e-2):
    """Return the nearest point of T*V(n,2) for a slightly perturbed state.

    The frame is corrected first, by symmetric orthonormalisation (the
    correction X (X^T X)^(-1/2) - X lies in the span of the f-constraint
    gradients), then the momenta by the exact minimal-norm tangential
    projection P - X sym(X^T P).
    """
    a = as_array(s_raw)
    worst = np.abs(_kernels.constraint_residuals(a)).max()
    if worst > basin:
        raise ProjectionError(f"state is outside the projection basin (residual {worst:.3e})")
    x, it = _kernels.project(a, newton_tol, newton_max_iter)
    if it < 0:
        raise ProjectionError(f"projection did not converge in {newton_max_iter} iterations")
    return CotangentState.from_array(x) if isinstance(s_raw, CotangentState) else x


def _velocity_fn(field):
    from .flows import FlowSpec, PhaseVelocity

    if isinstance(field, FlowSpec):
        code, par, xi, gam = field.kernel_args()

        def fn(s):
            out = np.empty_like(s)
            _kernels.field(code, s, par, xi, gam, out, np.empty(6))
            return out
        return fn

    def fn(s):
        v = field(s)
        return v.array if isinstance(v, PhaseVelocity) else np.asarray(v, dtype=float)
    return fn


def rk4_step(field, s, h):
    """One classical RK4 step in the ambient space; ``field`` maps a (4, n) array to a velocity."""
    f = _velocity_fn(field)
    a = as_array(s)
    k1 = f(a)
    k2 = f(a + 0.5 * h * k1)
    k3 = f(a + 0.5 * h * k2)
    k4 = f(a + h * k3)
    out = a + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return CotangentState.from_array(out) if isinstance(s, CotangentState) else out


def integrate(field, s0, cfg=None):
    """Integrate a :class:`FlowSpec` (compiled path) or any velocity callable."""
    from .flows import FlowSpec

    cfg = cfg or IntegratorConfig()
    a0 = check_on_manifold(s0)
    if cfg.adaptive:
        return _integrate_adaptive(_velocity_fn(field), a0, cfg)
    if isinstance(field, FlowSpec):
        return _integrate_kernel(field.kernel_args(), a0, cfg)
    return _integrate_python(_velocity_fn(field), a0, cfg)


def integrate_kernel_args(kernel_args, s0, cfg):
    """Compiled integration of raw ``(code, par, xi, gam)`` kernel arguments."""
    return _integrate_kernel(kernel_args, check_on_manifold(s0), cfg)


def _finish(states, nrec, worst, status, fail_step, cfg):
    times = np.arange(nrec) * cfg.h * cfg.record_stride
    traj = Trajectory.from_states(times, states[:nrec])
    if status == _kernels.STATUS_DRIFT:
        raise IntegrationAbort(
            f"constraint residual {worst:.3e} exceeded {ABORT_TOL:.0e} at step {fail_step}",
            traj, fail_step)
    if status == _kernels.STATUS_NEWTON:
        raise IntegrationAbort(f"projection failed at step {fail_step}", traj, fail_step)
    return traj


def _integrate_kernel(kernel_args, a0, cfg):
    code, par, xi, gam = kernel_args
    out = _kernels.integrate_fixed(
        code, a0, par, xi, gam, cfg.h, cfg.nsteps, cfg.record_stride,
        cfg.projection_interval, cfg.newton_tol, cfg.newton_max_iter, ABORT_TOL)
    return _finish(*out, cfg)


def _integrate_python(f, a0, cfg):
    nsteps = cfg.nsteps
    states = np.empty((nsteps // cfg.record_stride + 1,) + a0.shape)
    states[0] = a0
    nrec, worst = 1, 0.0
    s = a0.copy()
    for step in range(1, nsteps + 1):
        s = rk4_step(f, s, cfg.h)
        if step % cfg.projection_interval == 0:
            r = np.abs(_kernels.constraint_residuals(s)).max()
            worst = max(worst, r)
            if r > ABORT_TOL:
                return _finish(states, nrec, worst, _kernels.STATUS_DRIFT, step, cfg)
            s, it = _kernels.project(s, cfg.newton_tol, cfg.newton_max_iter)
            if it < 0:
                return _finish(states, nrec, worst, _kernels.STATUS_NEWTON, step, cfg)
        if step % cfg.record_stride == 0:
            states[nrec] = s
            nrec += 1
    return _finish(states, nrec, worst, _kernels.STATUS_OK, nsteps, cfg)


def _integrate_adaptive(f, a0, cfg):
    """Step-doubling RK4: accept when the two-half-step estimate agrees to ``rtol``."""
    t, h = 0.0, cfg.h
    s = a0.copy()
    times, states = [0.0], [s.copy()]
    while t < cfg.T - 1e-14 * cfg.T:
        h = min(h, cfg.T - t)
        big = rk4_step(f, s, h)
        half = rk4_step(f, rk4_step(f, s, 0.5 * h), 0.5 * h)
        err = np.abs(half - big).max() / 15.0
        scale = cfg.rtol * max(1.0, np.abs(half).max())
        if err <= scale:
            t += h
            r = np.abs(_kernels.constraint_residuals(half)).max()
            if r > ABORT_TOL:
                traj = Trajectory.from_states(times, states)
                raise IntegrationAbort(f"constraint residual {r:.3e} at t={t:.6g}", traj)
            s, it = _kernels.project(half + (half - big) / 15.0, cfg.newton_tol, cfg.newton_max_iter)
            if it < 0:
                raise IntegrationAbort(f"projection failed at t={t:.6g}", Trajectory.from_states(times, states))
            times.append(t)
            states.append(s.copy())
        factor = 0.9 * (scale / err) ** 0.2 if err > 0 else 2.0
        h *= min(2.0, max(0.2, factor))
        if h < 1e-12 * max(1.0, cfg.T):
            raise IntegrationAbort(f"step size underflow at t={t:.6g}")
    return Trajectory.from_states(times, states)


def expected_samples(cfg):
    return cfg.nsteps // cfg.record_stride + 1


def uniform_spacing(traj):
    """Sample spacing of a uniformly recorded trajectory."""
    d = np.diff(traj.times)
    if len(d) == 0 or not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise ValueError("trajectory is not uniformly sampled")
    return float(d[0])


__all__ = [
    "IntegratorConfig", "Trajectory", "IntegrationAbort", "ProjectionError",
    "rk4_step", "project_constraints", "integrate", "integrate_kernel_args",
    "expected_samples", "uniform_spacing",
]
