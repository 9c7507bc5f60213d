"""``fwguide`` command line.

Exit codes: 0 pass, 2 certificate failure, 3 collision, 4 configuration or
usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from fwguide import scenarios
from fwguide.errors import ConfigError
from fwguide.fermat_weber import existence_check, weiszfeld


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(scenarios.EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.generic,)):
        return obj.item()
    raise TypeError(type(obj))


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


def cmd_run(args) -> int:
    sc = scenarios.load_scenario(args.scenario, validate=False)
    sc = scenarios.with_overrides(sc, dt=args.dt, horizon=args.horizon, seed=args.seed)
    sc.validate()
    res = scenarios.run_scenario(sc, args.out or scenarios.default_output_dir())
    cert = res.report["certificate"]
    print(f"{sc.name}: {'PASS' if cert['passed'] else 'FAIL'} "
          f"(theorem {cert['theorem']}, final |delta| = {cert['final_delta']:.3e})")
    if res.report["collision_time"] is not None:
        print(f"collision at t = {res.report['collision_time']:g}")
    print(f"trajectory: {res.csv_path}")
    print(f"report:     {res.report_path}")
    return res.exit_code


def cmd_batch(args) -> int:
    if not scenarios.resolve_batch(args.pattern):
        raise ConfigError(f"no scenario file or preset matches {args.pattern!r}")
    rows = scenarios.batch(args.pattern, args.out or scenarios.default_output_dir(), jobs=args.jobs)
    _print(rows)
    return max(r["exit_code"] for r in rows)


def cmd_solve(args) -> int:
    sc = scenarios.load_scenario(args.scenario, validate=False)
    b = sc.beacons
    try:
        report = existence_check(b.p0, b.w)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _print({"solution": asdict(weiszfeld(b.p0, b.w)), "existence": asdict(report)})
    return scenarios.EXIT_PASS


def cmd_check(args) -> int:
    sc = scenarios.load_scenario(args.scenario)
    try:
        code, summary = scenarios.check_trajectory(args.csv, sc)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read trajectory {args.csv}: {exc}") from None
    _print(summary)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fwguide", description="Bearing-only guidance to the Fermat-Weber point.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one scenario file or preset")
    r.add_argument("scenario", help="scenario JSON path or preset name")
    r.add_argument("--out", help=f"output directory (default ${scenarios.OUTPUT_ENV} or ./runs)")
    r.add_argument("--dt", type=float)
    r.add_argument("--horizon", type=float)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run every scenario matching a file or preset glob")
    b.add_argument("pattern")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_batch)

    s = sub.add_parser("solve", help="print the Fermat-Weber point and existence margins")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="re-run the certificate on a stored trajectory")
    c.add_argument("csv")
    c.add_argument("--scenario", required=True)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fwguide: {exc}", file=sys.stderr)
        if "unknown preset" in str(exc) or "no scenario file or preset" in str(exc):
            parser.print_usage(sys.stderr)
        return scenarios.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
