"""Small dense linear algebra on so(n) and its complexification."""

import numpy as np

SKEW_TOL = 1e-12
MAX_DIM = 16


def _square(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def as_skew(x, tol=SKEW_TOL):
    """Return ``(x - x.T) / 2`` after checking ``x`` is skew to within ``tol``."""
    x = _square(np.asarray(x, dtype=float))
    if x.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {x.shape[0]} exceeds supported maximum {MAX_DIM}")
    asym = np.abs(x + x.T).max() if x.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not skew-symmetric (|X + X^T| = {asym:.3e})")
    return 0.5 * (x - x.T)


def wedge(x, y):
    """x ^ y = x y^T - y x^T."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"wedge needs two vectors of equal length, got {x.shape} and {y.shape}")
    return np.outer(x, y) - np.outer(y, x)


def pair(x, y):
    """Invariant pairing -tr(XY)/2 on so(n)."""
    x = _square(x)
    y = _square(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return -0.5 * np.trace(x @ y)


def trace_power(m, k):
    """tr(M^k) by repeated multiplication."""
    m = _square(m)
    if int(k) != k or k < 1:
        raise ValueError(f"power must be a positive integer, got {k}")
    acc = m
    for _ in range(int(k) - 1):
        acc = acc @ m
    return np.trace(acc)


def commutator(a, b):
    a = _square(a)
    b = _square(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def hat(w):
    """so(3) matrix of a 3-vector, ``hat(w) @ x == cross(w, x)``."""
    w = np.asarray(w, dtype=float)
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def vee(m):
    """Inverse of :func:`hat`."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def basis(n, i):
    """Standard basis vector E_i, 1-based like the usual notation."""
    e = np.zeros(n)
    e[i - 1] = 1.0
    return e
