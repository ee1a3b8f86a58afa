"""Test doubles shared between test modules."""

import numpy as np

from stiefel_flows import _kernels
from stiefel_flows.flows import FlowSpec
from stiefel_flows.potentials import PendulumI


def mismatched_subr_field(a1, a2, a4, eta, da3):
    """Riemannian-structure field at a3 = (a1+a2)/2 + da3 with the SubRH multipliers.

    The SubRH multipliers omit the eta ((a1+a2)/2 - a3) corrections, so this is
    the sub-Riemannian field formula evaluated off its surface. At da3 = 0 it
    coincides with the SubRH field.
    """
    a3 = 0.5 * (a1 + a2) + da3
    par = np.zeros(_kernels.NPAR)
    par[:4] = (a1, a2, a3, a4)
    par[6] = eta

    def field(s):
        s = np.ascontiguousarray(s, dtype=float)
        out = np.empty_like(s)
        _kernels.riemannian_rhs(s, par, out, np.empty(6))
        e1, e2, p1, p2 = s
        c = 0.5 * (a1 + a2) - a3
        out[2] += eta * c * np.dot(p2, e1) * e1
        out[3] -= eta * c * np.dot(p1, e2) * e2
        return out

    return field


def flipped_potential_field(flow):
    """Pendulum-I field with the sign of the potential force reversed.

    Stays on the constraint manifold (it is the flow of -Xi) but no longer
    satisfies the Lax equation built from +Xi.
    """
    return FlowSpec(flow.family, flow.metric, flow.eta, PendulumI(-flow.potential.xi), flow.n)
