"""Command line entry point: ``stiefel-flows simulate|verify|reduce``."""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .checks import equivalence_summary, run_checks, selected_checks
from .flows import SingularMultiplierError
from .integrals import conservation_report, integral_series
from .integrate import IntegrationAbort, ProjectionError, Trajectory, integrate
from .manifold import OffManifoldError
from .rigidbody import reduce_to_so3
from .scenario import CHECKS, ConfigError, bundled_scenarios, load_scenario, resolve_scenario_path

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3

CSV_INTEGRALS = ("H", "Psi", "J1", "J2")


def _out_paths(sc, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = sc.output.get("trajectory", f"{sc.name}.csv")
    report = sc.output.get("report", f"{sc.name}.json")
    return out_dir / Path(traj).name, out_dir / Path(report).name


def simulate(sc, out_dir):
    """Integrate, write the trajectory CSV and the diagnostics JSON; return the JSON dict."""
    flow = sc.flow()
    traj = integrate(flow, sc.initial_state(), sc.integrator)
    series = integral_series(traj, flow)
    report = conservation_report(traj, flow, sc.verify.lams)
    doc = {"scenario": sc.name, "diagnostics": report.to_dict()}
    if "equivalence" in selected_checks(sc):
        doc["equivalence"] = equivalence_summary(sc)
    csv_path, json_path = _out_paths(sc, out_dir)
    traj.write_csv(csv_path, {k: series[k] for k in CSV_INTEGRALS})
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return doc


def verify(sc, field=None):
    """Run the scenario's checks; return (exit code, table text).

    ``field`` substitutes the integrated vector field (see ``run_checks``).
    """
    results = run_checks(sc, field=field)
    lines = [f"# {sc.name}"] + [r.line() for r in results]
    return (EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY), "\n".join(lines)


def _run_one(command, name, out_dir):
    """Returns (exit code, printable text); runs in worker processes for --jobs."""
    try:
        sc = load_scenario(resolve_scenario_path(name))
        if command == "simulate":
            doc = simulate(sc, out_dir)
            text = f"{sc.name}: {doc['diagnostics']['samples']} samples, max residual " \
                   f"{doc['diagnostics']['max_constraint_residual']:.2e}"
            return EXIT_OK, text
        return verify(sc)
    except ConfigError as exc:
        return EXIT_CONFIG, f"{name}: config error: {exc}"
    except (IntegrationAbort, ProjectionError, SingularMultiplierError, OffManifoldError) as exc:
        return EXIT_ABORT, f"{name}: runtime abort: {exc}"


def _run_batch(command, files, out_dir, jobs):
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, [command] * len(files), files, [out_dir] * len(files)))
    else:
        results = [_run_one(command, f, out_dir) for f in files]
    for rc, text in results:
        print(text, file=sys.stderr if rc in (EXIT_CONFIG, EXIT_ABORT) else sys.stdout)
    return max(rc for rc, _ in results)


def reduce_csv(path, eta, out_path, gamma=None):
    traj = Trajectory.read_csv(path)
    if traj.n != 3:
        raise ConfigError("trajectory", f"reduce needs an n = 3 trajectory, got n = {traj.n}")
    cols = ["t"] + [f"R_{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    cols += ["m_1", "m_2", "m_3", "M_1", "M_2", "M_3"]
    if gamma is not None:
        cols += ["Gamma_1", "Gamma_2", "Gamma_3"]
    cols += ["K_norm2"]
    rows = []
    for t, s in zip(traj.times, traj.states):
        r = reduce_to_so3(s, eta, gamma)
        k = r.M + r.L
        row = [t, *r.frame.R.ravel(), *r.m, *r.M]
        if gamma is not None:
            row += list(r.Gamma)
        row.append(k @ k)
        rows.append(row)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
    return out_path


def build_parser():
    p = argparse.ArgumentParser(prog="stiefel-flows", description=__doc__)
    p.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
    p.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate a scenario, write trajectory CSV and diagnostics JSON")
    s.add_argument("files", nargs="+", help="scenario files or bundled scenario names")

    v = sub.add_parser("verify", help="run a scenario's checks and print a pass/fail table")
    v.add_argument("files", nargs="*", help="scenario files or bundled scenario names")
    v.add_argument("--list-checks", action="store_true", help="print the check names and exit")

    r = sub.add_parser("reduce", help="map an n = 3 trajectory CSV to body-frame quantities")
    r.add_argument("csv", help="trajectory CSV written by simulate")
    r.add_argument("--eta", type=float, required=True, help="magnetic strength used for the trajectory")
    r.add_argument("--gamma", help="fixed axis g1,g2,g3 to report Gamma = R^T gamma")
    r.add_argument("-o", "--output", help="output CSV (default: <csv stem>_body.csv in --out-dir)")

    sub.add_parser("list", help="list bundled scenarios")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "list":
        print("\n".join(bundled_scenarios()))
        return EXIT_OK
    if args.command == "verify" and args.list_checks:
        print("\n".join(CHECKS))
        return EXIT_OK
    if args.command in ("simulate", "verify"):
        if not args.files:
            print("no scenario files given", file=sys.stderr)
            return EXIT_CONFIG
        return _run_batch(args.command, args.files, args.out_dir, args.jobs)
    # reduce
    gamma = None
    try:
        if args.gamma is not None:
            try:
                gamma = np.array([float(x) for x in args.gamma.split(",")])
            except ValueError:
                raise ConfigError("--gamma", f"expected three comma-separated numbers, got {args.gamma!r}") from None
            if gamma.shape != (3,):
                raise ConfigError("--gamma", "expected three numbers")
        out = Path(args.output) if args.output else Path(args.out_dir) / (Path(args.csv).stem + "_body.csv")
        out.parent.mkdir(parents=True, exist_ok=True)
        reduce_csv(args.csv, args.eta, out, gamma)
    except OffManifoldError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
