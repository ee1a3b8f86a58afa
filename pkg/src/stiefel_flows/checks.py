"""Named verification checks run against a scenario."""

from dataclasses import dataclass

import numpy as np

from .flows import SO3_QUADB
from .integrals import conservation_report, involution_check, lax_builder, lax_residual
from .integrate import integrate
from .manifold import random_state
from .rigidbody import dictionary_case, equivalence_check
from .scenario import CHECKS


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: str
    passed: bool
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<16} {self.value:.3e}  ({self.tolerance}) {self.detail}".rstrip()


def applicable_checks(sc):
    flow = sc.flow()
    out = ["constraints", "conservation"]
    if flow.family != SO3_QUADB:
        out.insert(1, "field_oracle")
    if lax_builder(flow) is not None:
        out += ["isospectrality", "lax_residual", "lax_order"]
    if not flow.has_potential:
        out.append("involution")
    if sc.n == 3:
        try:
            dictionary_case(flow)
            out.append("equivalence")
        except ValueError:
            pass
    return [c for c in CHECKS if c in out]


def selected_checks(sc):
    return list(sc.verify.checks) or applicable_checks(sc)


class _Context:
    """Lazily computed trajectory and report shared between checks."""

    def __init__(self, sc, field=None):
        self.sc = sc
        self.flow = sc.flow()
        self.field = field if field is not None else self.flow
        self.s0 = sc.initial_state()
        self._traj = None
        self._report = None

    @property
    def traj(self):
        if self._traj is None:
            self._traj = integrate(self.field, self.s0, self.sc.integrator)
        return self._traj

    @property
    def report(self):
        if self._report is None:
            self._report = conservation_report(self.traj, self.flow, self.sc.verify.lams,
                                               with_lax_residual=False)
        return self._report


def _constraints(ctx):
    tol = ctx.sc.verify.tol("constraints")
    v = ctx.traj.max_residual()
    return CheckResult("constraints", v, f"< {tol:g}", v < tol)


def _field_oracle(ctx):
    tol = ctx.sc.verify.tol("field_oracle")
    flow = ctx.flow
    worst = 0.0
    for seed in range(int(ctx.sc.verify.params["oracle_states"])):
        s = random_state(flow.n, seed=seed).array
        a = flow.field(s, closed_form=True).array
        b = flow.field(s, closed_form=False).array
        worst = max(worst, float(np.abs(a - b).max() / max(1.0, np.abs(b).max())))
    return CheckResult("field_oracle", worst, f"< {tol:g} relative", worst < tol)


def _conservation(ctx):
    tol = ctx.sc.verify.tol("conservation")
    rows = [d for d in ctx.report.integrals if d.expected_conserved]
    worst = max(rows, key=lambda d: d.drift)
    names = ",".join(d.name for d in rows)
    return CheckResult("conservation", worst.drift, f"< {tol:g} relative",
                       worst.drift < tol, f"worst {worst.name}; checked {names}")


def _isospectrality(ctx):
    tol = ctx.sc.verify.tol("isospectrality")
    rows = ctx.report.trace_powers
    worst = max(rows, key=lambda d: d.drift)
    return CheckResult("isospectrality", worst.drift, f"< {tol:g} relative",
                       worst.drift < tol, f"{ctx.report.lax_pair} pair, worst {worst.name}")


def _lax_residual(ctx):
    factor = ctx.sc.verify.tol("lax_residual_factor")
    cfg = ctx.sc.integrator
    h = cfg.h * cfg.record_stride
    _, builder = lax_builder(ctx.flow)
    res = lax_residual(ctx.traj, builder, ctx.sc.verify.lams)
    v = max(res.values())
    tol = factor * h * h
    return CheckResult("lax_residual", v, f"< {factor:g} h^2 = {tol:.1e}", v < tol)


def _lax_order(ctx):
    lo, hi = ctx.sc.verify.tol("lax_order_min"), ctx.sc.verify.tol("lax_order_max")
    cfg = ctx.sc.integrator
    T = min(cfg.T, ctx.sc.verify.params["lax_order_T"])
    _, builder = lax_builder(ctx.flow)
    res = []
    for h in (cfg.h, cfg.h / 2):
        c = ctx.sc.with_integrator(h=h, T=T, record_stride=1, adaptive=False).integrator
        res.append(max(lax_residual(integrate(ctx.field, ctx.s0, c), builder, ctx.sc.verify.lams).values()))
    ratio = res[0] / res[1] if res[1] > 0 else float("inf")
    return CheckResult("lax_order", ratio, f"in [{lo:g}, {hi:g}]", lo <= ratio <= hi,
                       f"residuals {res[0]:.2e} -> {res[1]:.2e}")


def _involution(ctx):
    tol = ctx.sc.verify.tol("involution")
    T = ctx.sc.verify.params["involution_T"]
    h = ctx.sc.integrator.h
    m, eta = ctx.flow.metric, ctx.flow.eta
    a = involution_check("J1", "H_a", ctx.s0, T, h, metric=m, eta=eta)
    b = involution_check("H_a", "J2", ctx.s0, T, h, metric=m, eta=eta)
    v = max(a, b)
    return CheckResult("involution", v, f"< {tol:g} relative", v < tol,
                       f"H_a along J1: {a:.2e}; J2 along H_a: {b:.2e}")


def _equivalence(ctx):
    tol = ctx.sc.verify.tol("equivalence")
    ftol = ctx.sc.verify.tol("fourth_integral")
    cfg = ctx.sc.integrator
    r = equivalence_check(ctx.flow, ctx.s0, cfg.T, cfg.h)
    long = equivalence_check(ctx.flow, ctx.s0, ctx.sc.verify.params["fourth_integral_T"], cfg.h)
    f = max(long.fourth_drift, long.fourth_drift_reduced)
    ok = r.deviation < tol and f < ftol
    return CheckResult("equivalence", r.deviation, f"< {tol:g}; fourth integral < {ftol:g}", ok,
                       f"{r.case}, fourth integral drift {f:.2e}")


_RUNNERS = {
    "constraints": _constraints,
    "field_oracle": _field_oracle,
    "conservation": _conservation,
    "isospectrality": _isospectrality,
    "lax_residual": _lax_residual,
    "lax_order": _lax_order,
    "involution": _involution,
    "equivalence": _equivalence,
}


def run_checks(sc, checks=None, field=None):
    """Run the named checks (default: the scenario's selection).

    ``field`` replaces the flow's vector field for integration; it exists so
    that a deliberately wrong field can be shown to fail.
    """
    ctx = _Context(sc, field)
    names = checks or selected_checks(sc)
    return [_RUNNERS[name](ctx) for name in names]


def equivalence_summary(sc):
    flow = sc.flow()
    cfg = sc.integrator
    return equivalence_check(flow, sc.initial_state(), cfg.T, cfg.h).summary()


__all__ = ["CheckResult", "applicable_checks", "selected_checks", "run_checks", "equivalence_summary"]
