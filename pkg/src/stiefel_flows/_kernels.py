"""Hot numeric kernels shared by the flow, integrator and rigid-body layers.

A phase-space point is a C-contiguous ``(4, n)`` float array with rows
``e1, e2, p1, p2``; a velocity uses the same layout. Every function here is
compiled with numba unless ``STIEFEL_FLOWS_NUMBA=0``.

Parameter vector ``par`` (length ``NPAR``):

====== =====================================================
index  meaning
====== =====================================================
0..5   metric coefficients (a1..a4 or b1..b6)
6      eta, magnetic strength
7      potential kind (``POT_NONE``, ``POT_XI``, ``POT_GAMMA``)
8, 9   chi1, chi2 (pendulum-II)
10     kappa (natural flows)
11     Hamiltonian code for the generic multiplier solver
====== =====================================================
"""

import numpy as np

from ._jit import jit

NPAR = 12

FIELD_RIEMANNIAN = 0
FIELD_SUBR_H = 1
FIELD_SUBR_D0 = 2
FIELD_NATURAL = 3
FIELD_GENERIC = 4

HAM_QUADA = 0
HAM_QUADB = 1
HAM_J1 = 2
HAM_J2 = 3

POT_NONE = 0
POT_XI = 1
POT_GAMMA = 2

STATUS_OK = 0
STATUS_DRIFT = 1
STATUS_NEWTON = 2


@jit
def cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@jit
def constraint_residuals(s):
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    r = np.empty(6)
    r[0] = np.dot(e1, e1) - 1.0
    r[1] = np.dot(e2, e2) - 1.0
    r[2] = np.dot(e1, e2)
    r[3] = np.dot(e1, p1)
    r[4] = np.dot(e2, p2)
    r[5] = np.dot(e1, p2) + np.dot(e2, p1)
    return r


@jit
def constraint_rates(s, v):
    """Time derivatives of (f11, f22, f12, g11, g22, g12), halved for f11, f22."""
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    de1, de2, dp1, dp2 = v[0], v[1], v[2], v[3]
    r = np.empty(6)
    r[0] = np.dot(e1, de1)
    r[1] = np.dot(e2, de2)
    r[2] = np.dot(e1, de2) + np.dot(de1, e2)
    r[3] = np.dot(e1, dp1) + np.dot(de1, p1)
    r[4] = np.dot(e2, dp2) + np.dot(de2, p2)
    r[5] = np.dot(e1, dp2) + np.dot(de1, p2) + np.dot(e2, dp1) + np.dot(de2, p1)
    return r


@jit
def potential_gradient(s, par, xi, gam):
    n = s.shape[1]
    g = np.zeros((2, n))
    kind = int(par[7])
    if kind == POT_XI:
        g[0] = xi @ s[1]
        g[1] = -(xi @ s[0])
    elif kind == POT_GAMMA:
        g[0] = par[8] * gam[0]
        g[1] = par[9] * gam[1]
    return g


@jit
def potential_value(s, par, xi, gam):
    kind = int(par[7])
    if kind == POT_XI:
        return -np.dot(xi @ s[0], s[1])
    if kind == POT_GAMMA:
        return par[8] * np.dot(gam[0], s[0]) + par[9] * np.dot(gam[1], s[1])
    return 0.0


# --- closed-form fields -----------------------------------------------------


@jit
def riemannian_rhs(s, par, out, mult):
    a1, a2, a3, a4, eta = par[0], par[1], par[2], par[3], par[6]
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    u = np.dot(p1, e2)
    v = np.dot(p2, e1)
    p11 = np.dot(p1, p1)
    p22 = np.dot(p2, p2)
    p12 = np.dot(p1, p2)
    m11 = a4 * v
    m22 = a4 * u
    m12 = 0.5 * (a1 * u + a2 * v)
    c = 0.5 * (a1 + a2) - a3
    l11 = (a2 - a1) * u * v - a1 * p11 - a4 * p12 - eta * c * v
    l12 = -2.0 * a4 * u * v - 0.5 * (a1 + a2) * p12 - 0.5 * a4 * (p11 + p22)
    l22 = (a1 - a2) * u * v - a2 * p22 - a4 * p12 + eta * c * u
    out[0] = a1 * p1 + a4 * p2 + a3 * v * e2 - a4 * v * e1 - m12 * e2
    out[1] = a2 * p2 + a4 * p1 + a3 * u * e1 - m12 * e1 - a4 * u * e2
    out[2] = -a3 * u * p2 + eta * out[1] + a4 * v * p1 + m12 * p2 + l11 * e1 + l12 * e2
    out[3] = -a3 * v * p1 - eta * out[0] + m12 * p1 + a4 * u * p2 + l12 * e1 + l22 * e2
    mult[0] = l11
    mult[1] = l12
    mult[2] = l22
    mult[3] = m11
    mult[4] = m12
    mult[5] = m22


@jit
def subr_h_rhs(s, par, out, mult):
    a1, a2, a4, eta = par[0], par[1], par[3], par[6]
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    u = np.dot(p1, e2)
    v = np.dot(p2, e1)
    p11 = np.dot(p1, p1)
    p22 = np.dot(p2, p2)
    p12 = np.dot(p1, p2)
    l11 = (a2 - a1) * u * v - a1 * p11 - a4 * p12
    l12 = -2.0 * a4 * u * v - 0.5 * (a1 + a2) * p12 - 0.5 * a4 * (p11 + p22)
    l22 = (a1 - a2) * u * v - a2 * p22 - a4 * p12
    out[0] = a1 * p1 + a4 * p2 - a4 * v * e1 + a1 * v * e2
    out[1] = a2 * p2 + a4 * p1 - a4 * u * e2 + a2 * u * e1
    out[2] = -a2 * u * p2 + eta * out[1] + a4 * v * p1 + l11 * e1 + l12 * e2
    out[3] = -a1 * v * p1 - eta * out[0] + a4 * u * p2 + l12 * e1 + l22 * e2
    mult[0] = l11
    mult[1] = l12
    mult[2] = l22
    mult[3] = a4 * v
    mult[4] = 0.5 * (a1 * u + a2 * v)
    mult[5] = a4 * u


@jit
def subr_d0_rhs(s, par, out, mult):
    a1, a3, eta = par[0], par[2], par[6]
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    u = np.dot(p1, e2)
    v = np.dot(p2, e1)
    p11 = np.dot(p1, p1)
    p12 = np.dot(p1, p2)
    cp = a3 + 0.5 * a1
    cm = a3 - 0.5 * a1
    l11 = -a1 * u * v - a1 * p11 - eta * cm * u
    l12 = -0.5 * a1 * p12
    l22 = a1 * u * v + eta * cm * v
    out[0] = a1 * p1 + cp * v * e2
    out[1] = cm * u * e1
    out[2] = -cm * u * p2 + eta * cm * u * e1 + l11 * e1 + l12 * e2
    out[3] = -cp * v * p1 - eta * (a1 * p1 + cp * v * e2) + l12 * e1 + l22 * e2
    mult[0] = l11
    mult[1] = l12
    mult[2] = l22
    mult[3] = 0.0
    mult[4] = 0.5 * a1 * u
    mult[5] = 0.0


@jit
def natural_rhs(s, par, xi, gam, out, mult):
    eta, kappa = par[6], par[10]
    c = 1.0 + 2.0 * kappa
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    g = potential_gradient(s, par, xi, gam)
    v1, v2 = g[0], g[1]
    u = np.dot(p1, e2)
    v = np.dot(p2, e1)
    l11 = -np.dot(p1, p1) + np.dot(e1, v1) - eta * v + eta * c * u
    l12 = -np.dot(p1, p2) + 0.5 * (np.dot(e1, v2) + np.dot(e2, v1))
    l22 = -np.dot(p2, p2) + np.dot(e2, v2) + eta * u - eta * c * v
    out[0] = p1 - c * v * e2
    out[1] = p2 - c * u * e1
    out[2] = -v1 + c * u * p2 + eta * (p2 - c * u * e1) + l11 * e1 + l12 * e2
    out[3] = -v2 + c * v * p1 - eta * (p1 - c * v * e2) + l12 * e1 + l22 * e2
    mult[0] = l11
    mult[1] = l12
    mult[2] = l22
    mult[3] = 0.0
    mult[4] = 0.0
    mult[5] = 0.0


# --- generic multiplier solver ----------------------------------------------


@jit
def quad_a_gradient(s, par, xi, gam):
    """Gradient rows (dH/de1, dH/de2, dH/dp1, dH/dp2) of H_a plus potential."""
    a1, a2, a3, a4 = par[0], par[1], par[2], par[3]
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    u = np.dot(p1, e2)
    v = np.dot(p2, e1)
    gv = potential_gradient(s, par, xi, gam)
    g = np.empty_like(s)
    g[0] = a3 * u * p2 + gv[0]
    g[1] = a3 * v * p1 + gv[1]
    g[2] = a1 * p1 + a3 * v * e2 + a4 * p2
    g[3] = a2 * p2 + a3 * u * e1 + a4 * p1
    return g


@jit
def quad_b_gradient(s, par):
    b1, b2, b3, b4, b5, b6 = par[0], par[1], par[2], par[3], par[4], par[5]
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    w = cross(e1, e2)
    x = np.dot(p1, w)
    y = np.dot(p2, w)
    psi = np.dot(e1, p2) - np.dot(e2, p1)
    hx = b1 * x + b4 * y + b5 * psi
    hy = b2 * y + b4 * x + b6 * psi
    hpsi = b3 * psi + b5 * x + b6 * y
    g = np.empty_like(s)
    g[0] = hx * cross(e2, p1) + hy * cross(e2, p2) + hpsi * p2
    g[1] = hx * cross(p1, e1) + hy * cross(p2, e1) - hpsi * p1
    g[2] = hx * w - hpsi * e2
    g[3] = hy * w + hpsi * e1
    return g


@jit
def momentum_matrix(s, eta):
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    return (
        np.outer(p1, e1) - np.outer(e1, p1)
        + np.outer(p2, e2) - np.outer(e2, p2)
        + eta * (np.outer(e1, e2) - np.outer(e2, e1))
    )


@jit
def trace_power_gradient(s, eta, k):
    """Gradient of tr(Phi_eta^k) for even k."""
    phi = momentum_matrix(s, eta)
    pw = np.eye(phi.shape[0])
    for _ in range(k - 1):
        pw = pw @ phi
    sm = -2.0 * k * pw
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    g = np.empty_like(s)
    g[0] = -(sm @ p1) + eta * (sm @ e2)
    g[1] = -(sm @ p2) - eta * (sm @ e1)
    g[2] = sm @ e1
    g[3] = sm @ e2
    return g


@jit
def hamiltonian_gradient(s, par, xi, gam):
    code = int(par[11])
    if code == HAM_QUADB:
        return quad_b_gradient(s, par)
    if code == HAM_J1:
        return trace_power_gradient(s, par[6], 2)
    if code == HAM_J2:
        return trace_power_gradient(s, par[6], 4)
    return quad_a_gradient(s, par, xi, gam)


@jit
def twisted_rhs(s, g, eta, u, out):
    """Twisted Hamiltonian equations of H* for multipliers u = (mu11, mu12, mu22, l11, l12, l22)."""
    e1, e2, p1, p2 = s[0], s[1], s[2], s[3]
    m11, m12, m22, l11, l12, l22 = u[0], u[1], u[2], u[3], u[4], u[5]
    out[0] = g[2] - m11 * e1 - m12 * e2
    out[1] = g[3] - m12 * e1 - m22 * e2
    out[2] = -g[0] + eta * out[1] + l11 * e1 + l12 * e2 + m11 * p1 + m12 * p2
    out[3] = -g[1] - eta * out[0] + l12 * e1 + l22 * e2 + m12 * p1 + m22 * p2


@jit
def multiplier_system(s, g, eta):
    """Dense 6x6 system A u = b imposing vanishing constraint rates."""
    tmp = np.empty_like(s)
    u = np.zeros(6)
    twisted_rhs(s, g, eta, u, tmp)
    r0 = constraint_rates(s, tmp)
    a = np.empty((6, 6))
    for k in range(6):
        u[:] = 0.0
        u[k] = 1.0
        twisted_rhs(s, g, eta, u, tmp)
        a[:, k] = constraint_rates(s, tmp) - r0
    return a, -r0


@jit
def generic_rhs(s, par, xi, gam, out, mult):
    g = hamiltonian_gradient(s, par, xi, gam)
    a, b = multiplier_system(s, g, par[6])
    u = np.linalg.solve(a, b)
    twisted_rhs(s, g, par[6], u, out)
    mult[0] = u[3]
    mult[1] = u[4]
    mult[2] = u[5]
    mult[3] = u[0]
    mult[4] = u[1]
    mult[5] = u[2]


@jit
def field(code, s, par, xi, gam, out, mult):
    if code == FIELD_RIEMANNIAN:
        riemannian_rhs(s, par, out, mult)
    elif code == FIELD_SUBR_H:
        subr_h_rhs(s, par, out, mult)
    elif code == FIELD_SUBR_D0:
        subr_d0_rhs(s, par, out, mult)
    elif code == FIELD_NATURAL:
        natural_rhs(s, par, xi, gam, out, mult)
    else:
        generic_rhs(s, par, xi, gam, out, mult)


# --- projection and time stepping -------------------------------------------


@jit
def max_abs(r):
    m = 0.0
    for x in r:
        if abs(x) > m:
            m = abs(x)
    return m


@jit
def project(s, tol, max_iter):
    """Symmetric orthonormalisation of (e1, e2), then tangential projection of (p1, p2)."""
    x = s.copy()
    for it in range(max_iter):
        e1 = x[0].copy()
        e2 = x[1].copy()
        a = np.dot(e1, e1)
        b = np.dot(e1, e2)
        c = np.dot(e2, e2)
        rt = np.sqrt(a * c - b * b)
        t = np.sqrt(a + c + 2.0 * rt)
        d = rt * t
        # X <- X G^{-1/2}
        m00 = (c + rt) / d
        m01 = -b / d
        m11 = (a + rt) / d
        x[0] = m00 * e1 + m01 * e2
        x[1] = m01 * e1 + m11 * e2
        s11 = np.dot(x[0], x[2])
        s22 = np.dot(x[1], x[3])
        s12 = 0.5 * (np.dot(x[0], x[3]) + np.dot(x[1], x[2]))
        x[2] = x[2] - s11 * x[0] - s12 * x[1]
        x[3] = x[3] - s12 * x[0] - s22 * x[1]
        if max_abs(constraint_residuals(x)) < tol:
            return x, it + 1
    return x, -1


@jit
def rk4_step(code, s, h, par, xi, gam):
    k1 = np.empty_like(s)
    k2 = np.empty_like(s)
    k3 = np.empty_like(s)
    k4 = np.empty_like(s)
    mult = np.empty(6)
    field(code, s, par, xi, gam, k1, mult)
    field(code, s + 0.5 * h * k1, par, xi, gam, k2, mult)
    field(code, s + 0.5 * h * k2, par, xi, gam, k3, mult)
    field(code, s + h * k3, par, xi, gam, k4, mult)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@jit
def integrate_fixed(code, s0, par, xi, gam, h, nsteps, stride, proj_every,
                    newton_tol, newton_max_iter, abort_tol):
    """Fixed-step RK4 with periodic projection.

    Returns ``(states, nrec, max_pre_residual, status, fail_step)``; on abort
    ``states[:nrec]`` holds the samples recorded so far.
    """
    nrec_max = nsteps // stride + 1
    states = np.empty((nrec_max, s0.shape[0], s0.shape[1]))
    s = s0.copy()
    states[0] = s
    nrec = 1
    worst = 0.0
    for step in range(1, nsteps + 1):
        s = rk4_step(code, s, h, par, xi, gam)
        if step % proj_every == 0:
            r = max_abs(constraint_residuals(s))
            if r > worst:
                worst = r
            if r > abort_tol:
                return states, nrec, worst, STATUS_DRIFT, step
            s, it = project(s, newton_tol, newton_max_iter)
            if it < 0:
                return states, nrec, worst, STATUS_NEWTON, step
        if step % stride == 0:
            states[nrec] = s
            nrec += 1
    return states, nrec, worst, STATUS_OK, nsteps


# --- rigid body ---------------------------------------------------------------


@jit
def euler_poisson_rhs(y, inv_inertia, gyro, chi):
    m = y[0:3]
    gamma = y[3:6]
    omega = inv_inertia @ m
    out = np.empty(6)
    out[0:3] = cross(m + gyro, omega) + cross(gamma, chi)
    out[3:6] = cross(gamma, omega)
    return out


@jit
def integrate_body(y0, inv_inertia, gyro, chi, h, nsteps, stride):
    nrec = nsteps // stride + 1
    out = np.empty((nrec, 6))
    y = y0.copy()
    out[0] = y
    rec = 1
    for step in range(1, nsteps + 1):
        k1 = euler_poisson_rhs(y, inv_inertia, gyro, chi)
        k2 = euler_poisson_rhs(y + 0.5 * h * k1, inv_inertia, gyro, chi)
        k3 = euler_poisson_rhs(y + 0.5 * h * k2, inv_inertia, gyro, chi)
        k4 = euler_poisson_rhs(y + h * k3, inv_inertia, gyro, chi)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0:
            out[rec] = y
            rec += 1
    return out
