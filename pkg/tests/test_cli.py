import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from stiefel_flows import cli
from stiefel_flows.integrate import IntegratorConfig, Trajectory, integrate
from stiefel_flows.manifold import CotangentState, random_state
from stiefel_flows.flows import FlowSpec
from stiefel_flows.metrics import QuadA
from stiefel_flows.scenario import (
    CHECKS,
    SEED_ENV,
    ConfigError,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
)

from conftest import E
from helpers import flipped_potential_field


def bundled_doc(name):
    return json.loads(resolve_scenario_path(name).read_text())


def write_doc(tmp_path, doc, name="sc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def short(doc, T=0.5):
    doc = dict(doc)
    doc["integrator"] = dict(doc.get("integrator", {}), T=T)
    return doc


def read_rows(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_list_and_list_checks(capsys):
    assert cli.main(["list"]) == cli.EXIT_OK
    assert capsys.readouterr().out.split() == bundled_scenarios()
    assert cli.main(["verify", "--list-checks"]) == cli.EXIT_OK
    assert tuple(capsys.readouterr().out.split()) == tuple(CHECKS)


def test_malformed_eta_is_config_error(tmp_path, capsys):
    doc = bundled_doc("free_euclid_n4")
    doc["eta"] = "half"
    assert cli.main(["--out-dir", str(tmp_path), "simulate", write_doc(tmp_path, doc)]) == cli.EXIT_CONFIG
    assert "eta" in capsys.readouterr().err
    with pytest.raises(ConfigError) as exc:
        parse_scenario(doc)
    assert exc.value.field == "eta"


def test_json_syntax_error_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n": 3,\n  "family": }\n')
    assert cli.main(["verify", str(path)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 3" in err and "column" in err


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d.pop("metric"), "metric"),
    (lambda d: d.update(n=2), "n"),
    (lambda d: d.update(family="hyperbolic"), "family"),
    (lambda d: d["integrator"].update(h=-1.0), "integrator"),
])
def test_invalid_fields_are_named(mutate, field):
    doc = bundled_doc("free_euclid_n4")
    doc.setdefault("integrator", {})
    mutate(doc)
    with pytest.raises(ConfigError) as exc:
        parse_scenario(doc)
    assert field in str(exc.value)


def test_missing_scenario_and_empty_arguments(capsys):
    assert cli.main(["verify", "no_such_scenario"]) == cli.EXIT_CONFIG
    assert cli.main(["verify"]) == cli.EXIT_CONFIG
    assert cli.main(["--jobs", "0", "list"]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("name", bundled_scenarios())
def test_scenario_round_trip(name):
    sc = load_scenario(resolve_scenario_path(name))
    again = parse_scenario(json.loads(sc.to_json()))
    assert again == sc


def test_simulate_writes_trajectory_and_report(tmp_path):
    assert cli.main(["--out-dir", str(tmp_path), "simulate", "free_euclid_n4"]) == cli.EXIT_OK
    header, data = read_rows(tmp_path / "free_euclid_n4.csv")
    res = [header.index(f"res_{k}") for k in ("f11", "f22", "f12", "g11", "g22", "g12")]
    assert np.abs(data[:, res]).max() < 1e-10
    assert {"H", "Psi", "J1", "J2"} <= set(header)
    assert data[-1, 0] == pytest.approx(10.0)
    doc = json.loads((tmp_path / "free_euclid_n4.json").read_text())
    assert doc["scenario"] == "free_euclid_n4"
    assert doc["diagnostics"]["max_constraint_residual"] < 1e-10


def test_simulate_reports_equivalence(tmp_path):
    assert cli.main(["--out-dir", str(tmp_path), "simulate", "zv_equiv_n3"]) == cli.EXIT_OK
    doc = json.loads((tmp_path / "zv_equiv_n3.json").read_text())
    eq = doc["equivalence"]
    assert eq["deviation"] < 1e-6
    assert eq["fourth_integral_drift"] < 1e-6


def test_simulate_is_deterministic(tmp_path):
    path = write_doc(tmp_path, short(bundled_doc("pendulum1_n4")))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--out-dir", str(a), "simulate", path]) == cli.EXIT_OK
    assert cli.main(["--out-dir", str(b), "simulate", path]) == cli.EXIT_OK
    assert (a / "pendulum1_n4.csv").read_bytes() == (b / "pendulum1_n4.csv").read_bytes()


def test_seed_environment_override(tmp_path, monkeypatch):
    sc = load_scenario(resolve_scenario_path("pendulum1_n4"))
    base = sc.initial_state().array
    monkeypatch.setenv(SEED_ENV, "11")
    np.testing.assert_array_equal(sc.initial_state().array, random_state(4, seed=11, momentum_scale=0.5).array)
    assert not np.array_equal(sc.initial_state().array, base)
    monkeypatch.setenv(SEED_ENV, "eleven")
    with pytest.raises(ConfigError):
        sc.initial_state()


def test_parallel_jobs_match_serial(tmp_path):
    docs = [short(bundled_doc(n), T=0.3) for n in ("free_euclid_n4", "subr_h_n3")]
    paths = [write_doc(tmp_path, d, f"{d['name']}.json") for d in docs]
    assert cli.main(["--out-dir", str(tmp_path / "s"), "simulate", *paths]) == cli.EXIT_OK
    assert cli.main(["--out-dir", str(tmp_path / "p"), "--jobs", "2", "simulate", *paths]) == cli.EXIT_OK
    for d in docs:
        name = f"{d['name']}.csv"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_verify_pendulum_passes(capsys):
    assert cli.main(["verify", "pendulum1_n4"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "lax_residual" in out and "FAIL" not in out


def test_verify_catches_sign_error_in_field():
    sc = load_scenario(resolve_scenario_path("pendulum1_n4")).with_integrator(T=2.0)
    rc, table = cli.verify(sc, field=flipped_potential_field(sc.flow()))
    assert rc == cli.EXIT_VERIFY
    failing = [line.split()[1] for line in table.splitlines() if line.startswith("FAIL")]
    assert "lax_residual" in failing
    assert "constraints" not in failing


def _simulate_n3(tmp_path, flow, s0, T=2.0):
    traj = integrate(flow, s0, IntegratorConfig(h=1e-3, T=T, record_stride=20))
    path = tmp_path / "traj.csv"
    traj.write_csv(path)
    return str(path)


def test_reduce_constant_trajectory(tmp_path):
    s0 = CotangentState(E(3, 1), E(3, 2), np.zeros(3), np.zeros(3))
    path = _simulate_n3(tmp_path, FlowSpec("riemannian", QuadA(1, 1, 0, 0), 0.0, n=3), s0, T=0.2)
    out = tmp_path / "body.csv"
    assert cli.main(["reduce", path, "--eta", "0.0", "-o", str(out)]) == cli.EXIT_OK
    header, data = read_rows(out)
    assert header[:10] == ["t"] + [f"R_{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    assert header[-1] == "K_norm2"
    np.testing.assert_array_equal(data[:, 1:], np.tile(data[0, 1:], (len(data), 1)))
    np.testing.assert_array_equal(data[0, 1:10], np.eye(3).ravel())


def test_reduce_lagrange_axial_momentum(tmp_path):
    doc = short(bundled_doc("lagrange_n3"), T=3.0)
    assert cli.main(["--out-dir", str(tmp_path), "simulate", write_doc(tmp_path, doc)]) == cli.EXIT_OK
    out = tmp_path / "body.csv"
    gamma = ",".join(str(x) for x in doc["potential"]["gamma"])
    rc = cli.main(["reduce", str(tmp_path / "lagrange_n3.csv"), "--eta", str(doc["eta"]), "--gamma", gamma, "-o", str(out)])
    assert rc == cli.EXIT_OK
    header, data = read_rows(out)
    assert np.ptp(data[:, header.index("M_3")]) < 1e-8
    g = data[:, [header.index(f"Gamma_{i}") for i in (1, 2, 3)]]
    np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-12)


def test_reduce_zhukovskiy_volterra_norm(tmp_path):
    doc = short(bundled_doc("zv_equiv_n3"), T=3.0)
    assert cli.main(["--out-dir", str(tmp_path), "simulate", write_doc(tmp_path, doc)]) == cli.EXIT_OK
    out = tmp_path / "body.csv"
    assert cli.main(["reduce", str(tmp_path / "zv_equiv_n3.csv"), "--eta", str(doc["eta"]), "-o", str(out)]) == 0
    header, data = read_rows(out)
    k = data[:, header.index("K_norm2")]
    assert np.ptp(k) / max(1.0, k[0]) < 1e-7


def test_reduce_rejects_bad_input(tmp_path, capsys):
    traj = integrate(FlowSpec("riemannian", QuadA(1, 1, 0, 0), 0.0, n=4), random_state(4, seed=0),
                     IntegratorConfig(h=1e-2, T=0.05))
    path = tmp_path / "n4.csv"
    traj.write_csv(path)
    assert cli.main(["reduce", str(path), "--eta", "0"]) == cli.EXIT_CONFIG
    assert "n = 3" in capsys.readouterr().err
    s0 = random_state(3, seed=0)
    p3 = _simulate_n3(tmp_path, FlowSpec("riemannian", QuadA(1, 1, 0, 0), 0.0, n=3), s0, T=0.1)
    assert cli.main(["reduce", p3, "--eta", "0", "--gamma", "1,0"]) == cli.EXIT_CONFIG
    assert cli.main(["reduce", str(tmp_path / "missing.csv"), "--eta", "0"]) == cli.EXIT_CONFIG


def test_trajectory_csv_reads_back_after_simulate(tmp_path):
    path = write_doc(tmp_path, short(bundled_doc("subr_h_n3"), T=0.2))
    assert cli.main(["--out-dir", str(tmp_path), "simulate", path]) == cli.EXIT_OK
    traj = Trajectory.read_csv(tmp_path / "subr_h_n3.csv")
    assert traj.n == 3 and len(traj) > 1


def test_numpy_backend_matches_numba(tmp_path):
    """The pure-numpy fallback integrates to the same trajectory as the compiled kernels."""
    doc = short(bundled_doc("pendulum2_n5"), T=0.5)
    path = write_doc(tmp_path, doc)
    outputs = {}
    for flag in ("1", "0"):
        env = dict(os.environ, STIEFEL_FLOWS_NUMBA=flag)
        out = tmp_path / flag
        subprocess.run([sys.executable, "-m", "stiefel_flows", "--out-dir", str(out), "simulate", path],
                       check=True, env=env, capture_output=True)
        outputs[flag] = read_rows(out / "pendulum2_n5.csv")[1]
    np.testing.assert_allclose(outputs["0"], outputs["1"], rtol=0, atol=1e-12)
