"""Command line entry point: ``pilotsched run|sweep|plot|verify``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import parse_config
from .engine import run_simulation, run_sweep
from .errors import ConfigError
from .lyapunov import tradeoff_report
from .outputs import fmt, write_outputs
from .plots import emit_plots, find_runs
from .verify import run_all

log = logging.getLogger("pilotsched")

SWEEP_COLUMNS = ("run", "policy", "pool_update", "v", "rng_seed", "reconfig_rate", "avg_cost",
                 "avg_total_queue_bits", "avg_throughput_bps", "audit_satisfied_fraction")


def _float_list(text: str) -> list:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pilotsched", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one configuration")
    run.add_argument("--config", required=True, help="config file (key = value)")
    run.add_argument("--out", required=True, help="output directory")

    sweep = sub.add_parser("sweep", help="simulate a grid of V values")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--v-grid", required=True, type=_float_list, help="e.g. 200,2000,20000")
    sweep.add_argument("--seeds", type=int, default=1, help="independent drops per V")
    sweep.add_argument("--policies", default=None,
                       help="comma-separated policies; defaults to the config's policy")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--out", required=True)

    plot = sub.add_parser("plot", help="plot throughput/queue series of finished runs")
    plot.add_argument("--in", dest="in_dir", required=True, help="run or sweep directory")
    plot.add_argument("--out", required=True)

    verify = sub.add_parser("verify", help="run the oracle and slot-inequality self checks")
    verify.add_argument("--config", default=None)
    verify.add_argument("--states", type=int, default=1000)
    return parser


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    start = time.perf_counter()
    result = run_simulation(cfg)
    paths = write_outputs(result, args.out, wall_clock_s=time.perf_counter() - start)
    m = result.metrics
    print(f"reconfig_rate={m.reconfig_rate:.4f} avg_cost={m.avg_cost:.6g} "
          f"avg_total_queue_bits={m.avg_total_queue_bits:.6g} "
          f"avg_throughput_bps={m.avg_throughput_bps:.6g}")
    print(f"outputs in {paths['summary'].parent}")
    return 0


def _cmd_sweep(args) -> int:
    base = parse_config(args.config)
    policies = args.policies.split(",") if args.policies else [base.policy]
    out = Path(args.out)
    rows = []
    for policy in policies:
        pcfg = dataclasses.replace(base, policy=policy.strip()).validate()
        grid = args.v_grid if pcfg.policy in ("jssa", "static", "random") else args.v_grid[:1]
        start = time.perf_counter()
        results = run_sweep(pcfg, grid, seeds=args.seeds, workers=args.workers)
        elapsed = (time.perf_counter() - start) / max(len(results), 1)
        for res in results:
            c = res.config
            name = f"{c.policy}_V{c.v_param:g}_seed{c.rng_seed}"
            write_outputs(res, out / name, wall_clock_s=elapsed)
            m = res.metrics
            rows.append([name, c.policy, c.pool_update, c.v_param, c.rng_seed, m.reconfig_rate,
                         m.avg_cost, m.avg_total_queue_bits, m.avg_throughput_bps,
                         m.audit_satisfied_fraction])
            print(f"{name}: reconfig_rate={m.reconfig_rate:.4f} "
                  f"avg_total_queue_bits={m.avg_total_queue_bits:.6g}")
        jssa = [r.metrics for r in results if r.config.policy == "jssa"]
        if len({m.v for m in jssa}) >= 3 and args.seeds == 1:
            report = tradeoff_report(jssa)
            print("\n".join(report.lines()))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep_summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows([[r[0], r[1], r[2], fmt(r[3]), r[4]] + [fmt(x) for x in r[5:]]
                          for r in rows])
    return 0


def _cmd_plot(args) -> int:
    runs = find_runs(args.in_dir)
    if not runs:
        print(f"pilotsched plot: no runs (windows.csv) found under {args.in_dir}", file=sys.stderr)
        return 2
    for path in emit_plots(runs, args.out):
        print(path)
    return 0


def _cmd_verify(args) -> int:
    cfg = parse_config(args.config) if args.config else None
    results = run_all(cfg, n_states=args.states)
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "plot": _cmd_plot, "verify": _cmd_verify}


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"pilotsched {args.command}: configuration error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"pilotsched {args.command}: {exc}", file=sys.stderr)
        return 1
