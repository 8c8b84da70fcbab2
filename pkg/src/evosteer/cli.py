"""Command line interface.

Subcommands:

* ``solve <config>``   -- full pipeline, emits trajectory.csv, control.csv
  and report.json into the output directory.
* ``certify <config>`` -- Gramians and certificate only, report.json.
* ``oracle <config>``  -- solve plus the independent reference integrator,
  emits oracle.csv and the comparison in report.json (linear problems only).
* ``selftest``         -- runs the acceptance corpus, one line per criterion.

Exit codes: 0 success; 1 targets missed or selftest failure; 2 configuration
errors; 3 singular Gramian; 4 non-convergence.  The EVOSTEER_OUTDIR
environment variable overrides the configured output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, RunConfig, load_config
from .gramian import NotInvertibleError
from .reports import (build_report, emit_control, emit_trajectory,
                      ensure_outdir, write_report)
from .runner import certify, run
from .solver import NonConvergenceError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_NO_CONVERGENCE = 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="evosteer",
        description="Minimum-energy steering of impulsive delay evolution "
                    "equations with per-window target verification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "certify", "oracle"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the run configuration file")
        p.add_argument("--no-timing", action="store_true",
                       help="omit wall-clock timings from the report")
    st = sub.add_parser("selftest")
    st.add_argument("--criterion", help="run a single criterion by name")
    args = parser.parse_args(argv)

    if args.command == "selftest":
        return _selftest(args)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _dispatch(args, cfg)
    except NotInvertibleError as exc:
        print(f"gramian error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except NonConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _dispatch(args, cfg: RunConfig) -> int:
    outdir = ensure_outdir(cfg.outdir)
    timings_wanted = not args.no_timing

    if args.command == "certify":
        result = certify(cfg.problem, cfg.targets, cfg.numerics)
        report = build_report("certify", cfg.echo, cfg.numerics,
                              certificate=result.certificate,
                              blocks=result.blocks,
                              timings=result.timings if timings_wanted else None)
        write_report(os.path.join(outdir, "report.json"), report)
        print(f"contraction constant {result.certificate.contraction_constant:.6g} "
              f"({'<' if result.certificate.contracts else '>='} 1, "
              f"binding branch {result.certificate.binding_branch})")
        return EXIT_OK

    with_oracle = args.command == "oracle"
    if with_oracle and (cfg.problem.nonlinearity is not None
                        or cfg.problem.kernel is not None
                        or cfg.problem.nonlocal_term is not None):
        raise ConfigError("the oracle command requires a problem linear in "
                          "the state (no nonlinearity, kernel, or nonlocal term)")
    result = run(cfg.problem, cfg.targets, cfg.numerics, with_oracle=with_oracle)

    emit_trajectory(result.solve.trajectory, result.solve.control,
                    os.path.join(outdir, "trajectory.csv"))
    emit_control(result.solve.control, os.path.join(outdir, "control.csv"))
    oracle_cmp = None
    if with_oracle:
        emit_trajectory(result.oracle.trajectory, None,
                        os.path.join(outdir, "oracle.csv"))
        oracle_cmp = {"sup_distance": result.oracle_distance,
                      "defects": list(result.oracle.defects)}
    report = build_report(args.command, cfg.echo, cfg.numerics,
                          certificate=result.certificate, blocks=result.blocks,
                          solve=result.solve, verdict=result.verdict,
                          oracle_cmp=oracle_cmp,
                          timings=result.timings if timings_wanted else None)
    write_report(os.path.join(outdir, "report.json"), report)

    v = result.verdict
    print(f"converged in {result.solve.iterations} iterations; "
          f"defects {['%.3e' % d for d in v.defects]}; "
          f"totally controllable: {v.totally_controllable}")
    return EXIT_OK if v.totally_controllable else EXIT_FAIL


def _selftest(args) -> int:
    from .acceptance import run_all
    results = run_all(only=args.criterion)
    failed = [r for r in results if not r.ok]
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"[{status}] {r.name} ({r.elapsed:.1f}s): {r.detail}")
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
