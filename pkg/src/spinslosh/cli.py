"""Command-line entry point: ``spinslosh {simulate,calibrate,dimensionless,report}``."""

import argparse
import json
import logging
import sys
from dataclasses import replace

from .calibration import Bounds, DEConfig, calibrate
from .coupled import run_closed_loop, run_open_loop, scenario_dimensionless
from .exceptions import ScenarioError, SloshError, ValidationError
from .report import emit_report
from .scenario import parse_scenario
from .trace import read_trace_csv, write_trace_csv

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

log = logging.getLogger("spinslosh")


def _simulate(args):
    sc = parse_scenario(args.scenario)
    closed = sc.control is not None if args.mode is None else args.mode == "closed"
    if closed and sc.control is None:
        raise ValidationError(f"{args.scenario}: closed-loop run needs a [control] section", "control present")
    trace = run_closed_loop(sc) if closed else run_open_loop(sc)
    write_trace_csv(trace, args.output)
    wall = trace.meta["wall_clock_s"]
    print(f"{'closed' if closed else 'open'}-loop run: {len(trace)} samples, {len(trace.events)} events, "
          f"{wall:.3f} s wall clock -> {args.output}")


def _calibrate(args):
    sc = parse_scenario(args.scenario)
    if sc.control is not None:
        log.info("calibration uses prescribed motion; the [control] section is ignored")
        sc = replace(sc, control=None)
    ref = read_trace_csv(args.ref)
    cfg = DEConfig(popsize=args.popsize, max_generations=args.max_generations, tol=args.tol,
                   seed=args.seed, workers=args.workers)
    res = calibrate(ref, sc, Bounds.default(), cfg, channels=args.channels)
    text = json.dumps(res.as_dict(), indent=2)
    if args.output == "-":
        print(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(" ".join(f"{k}={v:.6g}" for k, v in res.params.items()) + f" objective={res.fun:.6g} -> {args.output}")


def _dimensionless(args):
    sc = parse_scenario(args.scenario)
    d = scenario_dimensionless(sc)
    if args.json:
        print(json.dumps(d._asdict()))
    else:
        print(f"Oh   = {d.Oh:.6g}\nBo_c = {d.Bo_c:.6g}\nBo_i = {d.Bo_i:.6g}")


def _report(args):
    summary = emit_report(read_trace_csv(args.trace), args.output)
    sys.stdout.write(summary.text())


def build_parser():
    ap = argparse.ArgumentParser(prog="spinslosh", description="Spinning-spacecraft propellant slosh simulator.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its trace as CSV")
    p.add_argument("scenario")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--open-loop", dest="mode", action="store_const", const="open")
    g.add_argument("--closed-loop", dest="mode", action="store_const", const="closed")
    p.set_defaults(mode=None, func=_simulate)
    p.add_argument("-o", "--output", required=True, help="trace CSV path")

    p = sub.add_parser("calibrate", help="fit m0_frac, a_ratio and C_f to a reference trace")
    p.add_argument("scenario")
    p.add_argument("--ref", required=True, help="reference trace CSV")
    p.add_argument("-o", "--output", default="-", help="JSON result path ('-' for stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--popsize", type=int, default=None, help="default 15 per parameter")
    p.add_argument("--max-generations", type=int, default=1000)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--workers", type=int, default=None, help="worker processes (else $SPINSLOSH_WORKERS, else 1)")
    p.add_argument("--channels", nargs="+", default=None, help="trace columns to fit (default: dominant force, Tz)")
    p.set_defaults(func=_calibrate)

    p = sub.add_parser("dimensionless", help="print Ohnesorge and Bond numbers of a scenario")
    p.add_argument("scenario")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_dimensionless)

    p = sub.add_parser("report", help="summarize a trace and plot it")
    p.add_argument("trace")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValidationError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SloshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
