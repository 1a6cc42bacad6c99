"""Command line front door.

Four subcommands: `run` executes one episode and prints its canonical
JSON result, `sweep` aggregates a success-rate table to CSV, `bench`
times planner and updater calls across maps, `serve` starts the HTTP
service. Exit codes: 0 on success, 2 on invalid input, 3 on runtime
failure.
"""

import argparse
import json
import sys

import numpy as np

from .experiments import (
    METHODS,
    bench_csv,
    canonical_instance,
    run_episode,
    summary_ranking,
    sweep,
    sweep_csv,
    time_benchmark,
)
from .planning import PlannerConfig

_SWEEP_KEYS = {"maps", "methods", "delta_ts", "episodes", "instances",
               "seed", "iterations"}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="prefnav",
        description="navigation under human path preferences")
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run one episode and print its result")
    run.add_argument("--map", required=True,
                     help="bundled map name or map JSON file")
    run.add_argument("--method", required=True, choices=METHODS)
    run.add_argument("--seed", required=True, type=int)
    run.add_argument("--delta-t", type=int, default=None)
    run.add_argument("--t-max", type=int, default=None)
    run.add_argument("--gamma-h", type=float, default=None)

    sw = sub.add_parser("sweep", help="success-rate table over methods")
    sw.add_argument("--config", required=True, help="JSON file of sweep settings")
    sw.add_argument("--out", required=True, help="CSV output path")

    be = sub.add_parser("bench", help="planner and updater timings")
    be.add_argument("--maps", required=True, help="directory of map JSON files")
    be.add_argument("--runs", required=True, type=int)
    be.add_argument("--out", required=True, help="CSV output path")

    sv = sub.add_parser("serve", help="start the HTTP service")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--host", default="127.0.0.1")
    return p


def _cmd_run(args):
    inst = canonical_instance(args.map, seed=args.seed, delta_T=args.delta_t,
                              T_max=args.t_max, gamma_h=args.gamma_h)
    r = run_episode(inst, args.method, np.random.default_rng(args.seed))
    sys.stdout.write(r.to_json() + "\n")
    return 3 if r.failure else 0


def _cmd_sweep(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    unknown = set(cfg) - _SWEEP_KEYS
    if unknown:
        raise ValueError("unknown sweep config keys: %s" % sorted(unknown))
    if "maps" not in cfg:
        raise ValueError("sweep config needs a 'maps' list")
    config = None
    if cfg.get("iterations") is not None:
        config = PlannerConfig(iterations=int(cfg["iterations"]))
    rows = sweep(
        maps=cfg["maps"],
        methods=cfg.get("methods", list(METHODS)),
        delta_Ts=cfg.get("delta_ts", [1, 5, 10, 20, 30]),
        episodes=int(cfg.get("episodes", 50)),
        seed=int(cfg.get("seed", 0)),
        instances=int(cfg.get("instances", 6)),
        config=config,
    )
    text = sweep_csv(rows)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError("cannot write %s: %s" % (args.out, exc)) from exc
    for method, rate in summary_ranking(rows):
        sys.stdout.write("%s %.6f\n" % (method, rate))
    return 0


def _cmd_bench(args):
    import os
    if not os.path.isdir(args.maps):
        raise ValueError("--maps must be a directory: %r" % (args.maps,))
    refs = sorted(os.path.join(args.maps, f) for f in os.listdir(args.maps)
                  if f.endswith(".json"))
    if not refs:
        raise ValueError("no map JSON files in %r" % (args.maps,))
    if args.runs < 1:
        raise ValueError("--runs must be >= 1")
    rows = time_benchmark(refs, list(METHODS), runs=args.runs)
    text = bench_csv(rows)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError("cannot write %s: %s" % (args.out, exc)) from exc
    for row in rows:
        sys.stdout.write("%s %s solve %.3f+-%.3f ms update %.3f+-%.3f ms\n" % (
            row["map"], row["method"], row["solve_ms"], row["solve_ci"],
            row["update_ms"], row["update_ci"]))
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "sweep":
            return _cmd_sweep(args)
        if args.cmd == "bench":
            return _cmd_bench(args)
        return _cmd_serve(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write("prefnav: invalid input: %s\n" % (exc,))
        return 2
    except KeyboardInterrupt:
        return 3
    except Exception as exc:
        sys.stderr.write("prefnav: %s: %s\n" % (type(exc).__name__, exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
