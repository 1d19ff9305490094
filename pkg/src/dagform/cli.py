"""Command line entry point.

    dagform run <scenario> [--out DIR] [--seed N] [--dt X] [--horizon T] [--batch] [--no-plots]
    dagform check <scenario>
    dagform version

``<scenario>`` is a JSON file or the name of a bundled scenario such as
``paper_fig4``. Exit codes: 0 certified and converged, 1 input error,
2 certification refused, 3 certified but not converged within the horizon.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .errors import ScenarioParseError, ScenarioValidationError, UncertifiedFormation
from .pipeline import EXIT_INPUT, EXIT_UNCERTIFIED, certify_scenario, run_scenario
from .scenario import bundled_scenarios, load_scenario

OUT_ENV = "DAGFORM_OUT"
DEFAULT_OUT = "runs"


def _run_one(spec: str, out: str, seed, dt, horizon, plots: bool) -> tuple[int, str]:
    try:
        sc = load_scenario(spec).with_overrides(seed=seed, dt=dt, horizon=horizon)
    except ScenarioParseError as exc:
        return EXIT_INPUT, f"{spec}: parse error: {exc}"
    try:
        summary = run_scenario(sc, out, plots=plots)
    except ScenarioValidationError as exc:
        return EXIT_INPUT, f"{sc.name}: invalid scenario:\n  " + "\n  ".join(exc.report.failures())
    except UncertifiedFormation as exc:
        lines = exc.certification.failures() if exc.certification else [str(exc)]
        return EXIT_UNCERTIFIED, f"{sc.name}: certification refused:\n  " + "\n  ".join(lines)
    except (ValueError, OSError) as exc:
        return EXIT_INPUT, f"{sc.name}: {exc}"
    msg = (
        f"{sc.name}: {'converged' if summary.converged else 'NOT converged'}; "
        f"final error {summary.final_tracking_error:.3e}, final |u| {summary.final_control_norm:.3e}, "
        f"{summary.samples} samples -> {os.path.join(out, sc.name)}"
    )
    if summary.label:
        msg += f" [{summary.label}]"
    return summary.exit_code, msg


def cmd_run(args) -> int:
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    if len(args.scenario) > 1 and not args.batch:
        print("several scenarios given; pass --batch to run them", file=sys.stderr)
        return EXIT_INPUT
    jobs = [(s, out, args.seed, args.dt, args.horizon, not args.no_plots) for s in args.scenario]
    if args.batch and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*j) for j in jobs]
    for code, msg in results:
        print(msg, file=sys.stdout if code == 0 else sys.stderr)
    return max(code for code, _ in results)


def cmd_check(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cert = certify_scenario(sc)
    print(json.dumps(cert.to_dict(), indent=2, sort_keys=True))
    for line in cert.failures():
        print(line, file=sys.stderr)
    return cert.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dagform", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="certify and simulate a scenario, write CSV/JSON/figures")
    run.add_argument("scenario", nargs="+", help="scenario file or bundled name "
                     f"({', '.join(bundled_scenarios())})")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    run.add_argument("--seed", type=int, help="seed for random initial positions")
    run.add_argument("--dt", type=float, help="integration step [s]")
    run.add_argument("--horizon", type=float, help="simulated duration [s]")
    run.add_argument("--batch", action="store_true", help="run several scenarios in parallel")
    run.add_argument("--no-plots", action="store_true", help="skip rendering figures")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="validate and certify without simulating")
    check.add_argument("scenario")
    check.set_defaults(func=cmd_check)

    ver = sub.add_parser("version", help="print the package version")
    ver.set_defaults(func=lambda a: print(__version__) or 0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
