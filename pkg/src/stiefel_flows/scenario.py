"""JSON scenario documents: parsing, validation and serialization."""

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .flows import FAMILIES, FlowSpec
from .integrate import IntegratorConfig
from .manifold import CotangentState, random_state
from .metrics import ManakovData, NuKappa, QuadA, QuadB, SubRD0, SubRH, manakov_to_params
from .potentials import NoPotential, PendulumI, PendulumII

SEED_ENV = "STIEFEL_FLOWS_SEED"

CHECKS = (
    "constraints",
    "field_oracle",
    "conservation",
    "isospectrality",
    "lax_residual",
    "lax_order",
    "involution",
    "equivalence",
)

DEFAULT_TOLERANCES = {
    "constraints": 1e-10,
    "field_oracle": 1e-9,
    "conservation": 1e-8,
    "isospectrality": 1e-6,
    "lax_residual_factor": 10.0,
    "lax_order_min": 3.0,
    "lax_order_max": 5.0,
    "involution": 1e-7,
    "equivalence": 1e-6,
    "fourth_integral": 1e-6,
}

DEFAULT_VERIFY_PARAMS = {
    "oracle_states": 100,
    "involution_T": 5.0,
    "fourth_integral_T": 20.0,
    "lax_order_T": 1.0,
}

METRIC_TYPES = {
    "quad_a": (QuadA, ("a1", "a2", "a3", "a4")),
    "quad_b": (QuadB, ("b1", "b2", "b3", "b4", "b5", "b6")),
    "nu_kappa": (NuKappa, ("nu", "kappa")),
    "subr_h": (SubRH, ("a1", "a2", "a4")),
    "subr_d0": (SubRD0, ("a1", "a3")),
}


class ConfigError(ValueError):
    """A scenario field is missing, mistyped or inconsistent."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _number(d, key, path, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}{key}", "required field is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {type(v).__name__} {v!r}")
    if not np.isfinite(v):
        raise ConfigError(f"{path}{key}", "must be finite")
    return float(v)


def _int(d, key, path, default=None):
    v = _number(d, key, path, default)
    if v != int(v):
        raise ConfigError(f"{path}{key}", f"expected an integer, got {v!r}")
    return int(v)


def _vector(d, key, path, n=None):
    if key not in d:
        raise ConfigError(f"{path}{key}", "required field is missing")
    v = d[key]
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{path}{key}", "expected a list of numbers")
    if n is not None and len(v) != n:
        raise ConfigError(f"{path}{key}", f"expected length {n}, got {len(v)}")
    return [float(x) for x in v]


def _object(d, key, path, required=True):
    if key not in d:
        if required:
            raise ConfigError(f"{path}{key}", "required field is missing")
        return {}
    v = d[key]
    if not isinstance(v, dict):
        raise ConfigError(f"{path}{key}", "expected an object")
    return v


def parse_metric(d):
    t = d.get("type")
    if t == "manakov":
        data = ManakovData(tuple(_vector(d, "alpha", "metric.", 3)), tuple(_vector(d, "beta", "metric.", 3)))
        try:
            return manakov_to_params(data)
        except ValueError as exc:
            raise ConfigError("metric", str(exc)) from None
    if t not in METRIC_TYPES:
        raise ConfigError("metric.type", f"expected one of {sorted(METRIC_TYPES) + ['manakov']}, got {t!r}")
    cls, names = METRIC_TYPES[t]
    return cls(*(_number(d, k, "metric.") for k in names))


def metric_to_dict(m):
    for t, (cls, names) in METRIC_TYPES.items():
        if type(m) is cls:
            return {"type": t, **{k: getattr(m, k) for k in names}}
    raise TypeError(type(m).__name__)


def parse_potential(d, n):
    t = d.get("type", "none")
    if t == "none":
        return {"type": "none"}
    if t == "pendulum1":
        if "xi" in d:
            xi = d["xi"]
            if not isinstance(xi, list) or len(xi) != n:
                raise ConfigError("potential.xi", f"expected a {n}x{n} matrix")
            rows = [_vector({"row": r}, "row", "potential.xi.", n) for r in xi]
            try:
                PendulumI(np.array(rows))
            except ValueError as exc:
                raise ConfigError("potential.xi", str(exc)) from None
            return {"type": "pendulum1", "xi": rows}
        if n != 3:
            raise ConfigError("potential", "the axis form of pendulum1 needs n = 3; give xi instead")
        out = {"type": "pendulum1", "gamma": _vector(d, "gamma", "potential.", 3),
               "chi3": _number(d, "chi3", "potential.")}
        try:
            PendulumI.from_axis(out["gamma"], out["chi3"])
        except ValueError as exc:
            raise ConfigError("potential.gamma", str(exc)) from None
        return out
    if t == "pendulum2":
        out = {"type": "pendulum2",
               "gamma1": _vector(d, "gamma1", "potential.", n),
               "gamma2": _vector(d, "gamma2", "potential.", n),
               "chi1": _number(d, "chi1", "potential."),
               "chi2": _number(d, "chi2", "potential.")}
        try:
            PendulumII(out["gamma1"], out["gamma2"], out["chi1"], out["chi2"])
        except ValueError as exc:
            raise ConfigError("potential", str(exc)) from None
        return out
    raise ConfigError("potential.type", f"expected none, pendulum1 or pendulum2, got {t!r}")


def build_potential(d):
    t = d["type"]
    if t == "none":
        return NoPotential()
    if t == "pendulum1":
        if "xi" in d:
            return PendulumI(np.array(d["xi"]))
        return PendulumI.from_axis(d["gamma"], d["chi3"])
    return PendulumII(d["gamma1"], d["gamma2"], d["chi1"], d["chi2"])


def parse_initial(d, n):
    if "seed" in d:
        return {"seed": _int(d, "seed", "initial."),
                "momentum_scale": _number(d, "momentum_scale", "initial.", 1.0)}
    out = {k: _vector(d, k, "initial.", n) for k in ("e1", "e2", "p1", "p2")}
    return out


def parse_integrator(d):
    kw = {}
    for key, conv in (("h", _number), ("T", _number), ("projection_interval", _int),
                      ("newton_tol", _number), ("newton_max_iter", _int),
                      ("record_stride", _int), ("rtol", _number)):
        if key in d:
            kw[key] = conv(d, key, "integrator.")
    if "adaptive" in d:
        if not isinstance(d["adaptive"], bool):
            raise ConfigError("integrator.adaptive", "expected true or false")
        kw["adaptive"] = d["adaptive"]
    unknown = set(d) - {f.name for f in fields(IntegratorConfig)}
    if unknown:
        raise ConfigError("integrator", f"unknown keys {sorted(unknown)}")
    try:
        return IntegratorConfig(**kw)
    except ValueError as exc:
        raise ConfigError("integrator", str(exc)) from None


@dataclass(frozen=True)
class VerifySpec:
    checks: tuple = ()          # empty means every applicable check
    lams: tuple = (0.5, 1.0, 2.0)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    params: dict = field(default_factory=lambda: dict(DEFAULT_VERIFY_PARAMS))

    def tol(self, key):
        return self.tolerances[key]


def parse_verify(d):
    checks = d.get("checks", [])
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ConfigError("verify.checks", f"expected a list drawn from {list(CHECKS)}")
    lams = tuple(_vector(d, "lams", "verify.")) if "lams" in d else (0.5, 1.0, 2.0)
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in _object(d, "tolerances", "verify.", required=False).items():
        if k not in tol:
            raise ConfigError(f"verify.tolerances.{k}", "unknown tolerance")
        tol[k] = _number({k: v}, k, "verify.tolerances.")
    params = dict(DEFAULT_VERIFY_PARAMS)
    for k, v in _object(d, "params", "verify.", required=False).items():
        if k not in params:
            raise ConfigError(f"verify.params.{k}", "unknown parameter")
        params[k] = _number({k: v}, k, "verify.params.")
    params["oracle_states"] = int(params["oracle_states"])
    return VerifySpec(tuple(checks), lams, tol, params)


@dataclass(frozen=True)
class Scenario:
    name: str
    n: int
    family: str
    metric: object
    eta: float
    potential: dict
    initial: dict
    integrator: IntegratorConfig
    verify: VerifySpec
    output: dict

    def flow(self):
        return FlowSpec(self.family, self.metric, self.eta, build_potential(self.potential), self.n)

    def initial_state(self):
        if "seed" in self.initial:
            seed = self.initial["seed"]
            env = os.environ.get(SEED_ENV)
            if env not in (None, ""):
                try:
                    seed = int(env)
                except ValueError:
                    raise ConfigError(SEED_ENV, f"expected an integer, got {env!r}") from None
            return random_state(self.n, seed=seed, momentum_scale=self.initial["momentum_scale"])
        return CotangentState(*(np.array(self.initial[k]) for k in ("e1", "e2", "p1", "p2")))

    def to_dict(self):
        return {
            "name": self.name,
            "n": self.n,
            "family": self.family,
            "metric": metric_to_dict(self.metric),
            "eta": self.eta,
            "potential": self.potential,
            "initial": self.initial,
            "integrator": asdict(self.integrator),
            "verify": {
                "checks": list(self.verify.checks),
                "lams": list(self.verify.lams),
                "tolerances": self.verify.tolerances,
                "params": self.verify.params,
            },
            "output": self.output,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def with_integrator(self, **kw):
        return replace(self, integrator=replace(self.integrator, **kw))


def parse_scenario(doc):
    if not isinstance(doc, dict):
        raise ConfigError("scenario", "top level must be a JSON object")
    n = _int(doc, "n", "")
    if not 3 <= n <= 16:
        raise ConfigError("n", f"must lie in [3, 16], got {n}")
    family = doc.get("family")
    if family not in FAMILIES:
        raise ConfigError("family", f"expected one of {list(FAMILIES)}, got {family!r}")
    metric = parse_metric(_object(doc, "metric", ""))
    eta = _number(doc, "eta", "", 0.0)
    potential = parse_potential(_object(doc, "potential", "", required=False) or {"type": "none"}, n)
    initial = parse_initial(_object(doc, "initial", ""), n)
    integrator = parse_integrator(_object(doc, "integrator", "", required=False))
    verify = parse_verify(_object(doc, "verify", "", required=False))
    output = _object(doc, "output", "", required=False)
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ConfigError("name", "expected a string")
    sc = Scenario(name, n, family, metric, eta, potential, initial, integrator, verify, dict(output))
    try:
        sc.flow()
    except ValueError as exc:
        raise ConfigError("family/metric/potential", str(exc)) from None
    if "e1" in initial:
        from .manifold import OffManifoldError, check_on_manifold
        try:
            check_on_manifold(sc.initial_state())
        except OffManifoldError as exc:
            raise ConfigError("initial", str(exc)) from None
    return sc


def load_scenario(path):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return parse_scenario(doc)


def bundled_scenarios():
    """Names of the scenario files shipped with the package."""
    root = resources.files("stiefel_flows") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(name):
    """A filesystem path, or the name of a bundled scenario."""
    p = Path(name)
    if p.exists():
        return p
    root = resources.files("stiefel_flows") / "scenarios"
    candidate = root / (name if name.endswith(".json") else name + ".json")
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError("scenario", f"no such file or bundled scenario: {name}")
