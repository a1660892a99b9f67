"""Command line entry points: batch runs from a TOML file, and a self-test.

``monovi run <config.toml>`` verifies the bracket, runs the requested
extremal iterations, optionally probes extremality with random-start fixed
points, and writes per-direction solution CSVs, convergence JSON-lines and
a run summary.  Outputs are deterministic for a fixed config and seed
(wall-clock timings go to stdout, never into files) and are written
atomically (temp file + rename).

Exit codes: 0 success, 2 config/schema error, 3 solver failure,
4 certificate/bracket/probe failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .assembly import UnsupportedOperatorError
from .bracket_check import BracketHelperError
from .config import ConfigError, load_config, setup_from_config
from .extremal import (IterationError, maximality_probe,
                       random_start_fixed_points, solve_extremal)
from .selfcheck import FAULTS, problem_invariants, run_all
from .vi import SolverError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CERTIFICATE = 4

_DIRECTION_NAME = {"from_upper": "maximal", "from_lower": "minimal"}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    return obj


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def _write_solution_csv(path, mesh, u, v):
    cols = ["node_index", "x"] + (["y"] if mesh.dim == 2 else []) + ["u", "v"]
    lines = [",".join(cols)]
    for i in range(mesh.n_nodes):
        row = [str(i)] + [repr(float(c)) for c in mesh.coords[i]]
        row += [repr(float(u[i])), repr(float(v[i]))]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_convergence_jsonl(path, report):
    lines = []
    for n in range(report.outer_iterations):
        rec = {
            "n": n,
            "sup_increment": float(report.increments[n]),
            "mono_margin": float(report.mono_margins[n]),
            "inner_iters": int(report.inner_iterations[n]),
            "energy": (float(report.energies[n])
                       if n < len(report.energies) else None),
        }
        lines.append(json.dumps(rec, sort_keys=True))
    _atomic_write(path, "\n".join(lines) + "\n")


def _config_hash(cfg):
    canon = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


def _report_summary(report):
    return {
        "outer_iterations": report.outer_iterations,
        "final_increment": report.increments[-1] if report.increments else 0.0,
        "max_mono_margin": max(report.mono_margins) if report.mono_margins else 0.0,
        "membership_residual": report.membership_residual,
        "stationarity_residual": report.stationarity_residual,
        "inner_iterations_total": int(sum(report.inner_iterations)),
        "final_energy": report.energies[-1] if report.energies else None,
        "final_seminorm_p": report.seminorms[-1] if report.seminorms else None,
        "converged": report.converged,
    }


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        setup = setup_from_config(cfg, seed_override=args.seed,
                                  output_override=args.output_dir,
                                  threads_override=args.threads)
    except (ConfigError, OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as e:
        print(f"solver failure while constructing the bracket: {e}",
              file=sys.stderr)
        return EXIT_SOLVER
    except BracketHelperError as e:
        print(f"bracket construction failed: {e}", file=sys.stderr)
        return EXIT_CERTIFICATE

    os.makedirs(setup.output_dir, exist_ok=True)
    summary = {
        "schema_version": cfg["schema_version"],
        "package_version": __version__,
        "config": _jsonable(cfg),
        "config_hash": _config_hash(cfg),
        "seed": setup.seed,
        "threads": setup.threads,
        "bracket": {
            "upper": _jsonable(setup.bracket.upper_report),
            "lower": _jsonable(setup.bracket.lower_report),
            "verified": setup.bracket.verified,
        },
        "tolerances": _jsonable(setup.tolerances),
        "directions": {},
        "probe": None,
        "invariants": None,
    }

    if not setup.bracket.verified:
        print("bracket verification failed:", file=sys.stderr)
        print(f"  upper: {setup.bracket.upper_report}", file=sys.stderr)
        print(f"  lower: {setup.bracket.lower_report}", file=sys.stderr)
        _finalize(setup, summary)
        return EXIT_CERTIFICATE

    t_all = time.perf_counter()
    reports = {}
    for direction in setup.directions:
        name = _DIRECTION_NAME[direction]
        t0 = time.perf_counter()
        try:
            rep = solve_extremal(setup.problem, setup.bracket, direction,
                                 setup.tolerances,
                                 keep_inner_traces=setup.inner_traces)
        except UnsupportedOperatorError as e:
            print(f"unsupported operator: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except (SolverError, IterationError) as e:
            print(f"solver failure ({name}): {e}", file=sys.stderr)
            _finalize(setup, summary)
            return (EXIT_CERTIFICATE if "certificate" in str(e).lower()
                    else EXIT_SOLVER)
        wall = time.perf_counter() - t0
        reports[direction] = rep
        sol_file = os.path.join(setup.output_dir, f"solution_{name}.csv")
        conv_file = os.path.join(setup.output_dir, f"convergence_{name}.jsonl")
        _write_solution_csv(sol_file, setup.problem.mesh, rep.u_final, rep.v_final)
        _write_convergence_jsonl(conv_file, rep)
        entry = _report_summary(rep)
        entry["files"] = {"solution": os.path.basename(sol_file),
                          "convergence": os.path.basename(conv_file)}
        if setup.inner_traces:
            trace_file = os.path.join(setup.output_dir,
                                      f"inner_traces_{name}.jsonl")
            lines = [json.dumps({"outer": n, **tr}, sort_keys=True)
                     for n, tr in enumerate(rep.inner_traces)]
            _atomic_write(trace_file, "\n".join(lines) + "\n")
            entry["files"]["inner_traces"] = os.path.basename(trace_file)
        summary["directions"][name] = entry
        print(f"{name}: converged in {rep.outer_iterations} outer iterations, "
              f"membership residual {rep.membership_residual:.3e} ({wall:.2f} s)")

    probe_failed = False
    if setup.probe_candidates > 0:
        candidates = random_start_fixed_points(
            setup.problem, setup.bracket, setup.probe_candidates,
            seed=setup.seed, tols=setup.tolerances)
        probe = maximality_probe(
            setup.problem, setup.bracket, candidates, tol=setup.probe_tol,
            extremes=(reports["from_lower"].u_final,
                      reports["from_upper"].u_final),
            tols=setup.tolerances)
        summary["probe"] = _jsonable(probe)
        probe_failed = not probe["passed"]
        print(f"probe: {probe['count']} candidates, "
              f"{'pass' if probe['passed'] else 'FAIL'} "
              f"(worst margin {probe['worst_margin']:.3e})")

    summary["invariants"] = _jsonable(
        problem_invariants(setup.problem, seed=setup.seed))
    _finalize(setup, summary)
    print(f"total {time.perf_counter() - t_all:.2f} s; outputs in "
          f"{setup.output_dir}/")
    if probe_failed or not summary["invariants"]["passed"]:
        return EXIT_CERTIFICATE
    return EXIT_OK


def _finalize(setup, summary):
    _atomic_write(os.path.join(setup.output_dir, "summary.json"),
                  json.dumps(summary, sort_keys=True, indent=2) + "\n")


def cmd_selftest(args):
    results = run_all(seed=args.seed if args.seed is not None else 0,
                      fault=args.inject_fault)
    failed = []
    for res in results:
        status = "pass" if res["passed"] else "FAIL"
        print(f"[{status}] {res['name']}: worst margin {res['worst']:.3e}")
        if not res["passed"]:
            failed.append(res["name"])
    if failed:
        print(f"self-test failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print("self-test passed")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monovi",
        description="Extremal solutions of quasilinear elliptic inclusions "
                    "with discontinuous nonlinearities, by monotone "
                    "iteration of convex variational inequalities.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a run file")
    run_p.add_argument("config", help="path to a TOML run file")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the run-file rng seed")
    run_p.add_argument("--output-dir", default=None,
                       help="override the run-file output directory")
    run_p.add_argument("--threads", type=int, default=None,
                       help="worker count recorded in the summary "
                            "(numerics are vectorized; env MONOVI_THREADS "
                            "overrides)")
    run_p.set_defaults(func=cmd_run)

    st_p = sub.add_parser("selftest", help="run the embedded invariant suites")
    st_p.add_argument("--seed", type=int, default=None)
    st_p.add_argument("--inject-fault", choices=FAULTS, default=None,
                      help="testing only: corrupt one comparison to prove "
                           "the suite catches it")
    st_p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is None and "MONOVI_THREADS" in os.environ:
        try:
            args.threads = int(os.environ["MONOVI_THREADS"])
        except ValueError:
            print("MONOVI_THREADS must be an integer", file=sys.stderr)
            return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
