"""Command line entry point.

Exit codes: 0 success, 1 evaluation error, 2 infrastructure error,
3 usage error.
"""
from __future__ import annotations

import argparse
import sys
import time

from .errors import EvalError, FutureError

EXIT_EVAL, EXIT_FUTURE, EXIT_USAGE = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _env_pairs(pairs):
    from .exprlang import parse_value_literal

    env = {}
    for pair in pairs or ():
        name, sep, text = pair.partition("=")
        if not sep or not name:
            raise UsageError(f"--env expects name=value, got {pair!r}")
        try:
            env[name] = parse_value_literal(text)
        except ValueError as e:
            raise UsageError(f"--env {name}: {e}") from None
    return env


def _session(plan, seed=None, rng_misuse="warning"):
    from .core import Session

    try:
        return Session(plan, seed=seed, rng_misuse=rng_misuse)
    except ValueError as e:
        raise UsageError(str(e)) from None


# -- subcommands --------------------------------------------------------------

def cmd_worker(args) -> int:
    from . import protocol

    if args.mode == "serve":
        if not args.listen:
            raise UsageError("worker serve needs --listen host:port")
        protocol.serve_worker(args.listen, persist=args.persist)
    elif args.stdio:
        protocol.run_stdio_worker()
    elif args.connect:
        protocol.run_connect_worker(args.connect)
    else:
        raise UsageError("worker needs one of: serve, --stdio, --connect")
    return 0


def cmd_run(args) -> int:
    from .exprlang import ParseError, format_value, parse

    try:
        expr = parse(args.expr)
    except ParseError as e:
        raise UsageError(f"cannot parse --expr: {e}") from None
    env = _env_pairs(args.env)
    with _session(args.plan, args.seed, args.rng_misuse) as session:
        f = session.future(expr, env, seed=args.seed is not None,
                           globals=args.globals.split(",") if args.globals else None)
        v = session.value(f)
    print(format_value(v))
    return 0


def cmd_demo_map(args) -> int:
    from .exprlang import format_value
    from .mapreduce import future_map

    fn = "(lambda (i) (+ i (nth (rnorm 1) 0)))" if args.seed is not None else "(lambda (i) (* i i))"
    with _session(args.plan, args.seed) as session:
        start = time.perf_counter()
        out = future_map(range(1, args.n + 1), fn, chunks=args.chunks, seed=args.seed is not None,
                         session=session)
        elapsed = time.perf_counter() - start
    print(format_value(out))
    print(f"elapsed {elapsed:.3f} s on {session.plan}")
    return 0


def cmd_conformance(args) -> int:
    from .conformance import run_conformance

    report = run_conformance(args.plan, pattern=args.filter)
    print(report.table())
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_json_text())
    return 0 if report.ok else 1


def cmd_rng_dump(args) -> int:
    from .rng import DEFAULT_SEED, RngCursor, RngState, next_uniform, nth_stream, stream_for

    if args.stream < 0 or args.n < 0:
        raise UsageError("--stream and --n must be non-negative")
    if args.seed is None:
        state = nth_stream(RngState(DEFAULT_SEED[:3], DEFAULT_SEED[3:]), args.stream)
    else:
        state = stream_for(args.seed, args.stream)
    cursor = RngCursor(state)
    for _ in range(args.n):
        print(repr(next_uniform(cursor)))
    return 0


def bench(plan, tasks: int, task_ms: int) -> dict:
    """Wall time of ``tasks`` sleeping tasks under ``plan`` and sequentially.

    Only the batch is timed; starting the workers is not.
    """
    from .core import Session
    from .mapreduce import value_all
    from .relay import RecordingSinks

    times = {}
    for label, p in (("sequential", "sequential"), ("plan", plan)):
        with Session(p, sinks=RecordingSinks()) as session:
            start = time.perf_counter()
            fs = [session.future(f"(begin (sleep_ms {task_ms}) {i})") for i in range(tasks)]
            value_all(fs)
            times[label] = time.perf_counter() - start
    times["speedup"] = times["sequential"] / times["plan"]
    return times


def cmd_bench(args) -> int:
    t = bench(args.plan, args.tasks, args.task_ms)
    print(f"sequential {t['sequential']:.3f} s")
    print(f"{args.plan} {t['plan']:.3f} s")
    print(f"speedup {t['speedup']:.2f}x ({t['plan'] / t['sequential']:.0%} of sequential)")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="futurekit", description="Futures over pluggable backends.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    w = sub.add_parser("worker", help="run a worker process")
    w.add_argument("mode", nargs="?", choices=["serve"], help="TCP daemon mode")
    w.add_argument("--listen", help="host:port for serve")
    w.add_argument("--persist", action="store_true", help="keep serving after a controller leaves")
    w.add_argument("--stdio", action="store_true", help="speak the protocol on stdin/stdout")
    w.add_argument("--connect", help="dial a controller at host:port")
    w.set_defaults(func=cmd_worker)

    r = sub.add_parser("run", help="evaluate one expression as a future")
    r.add_argument("--plan", default="sequential")
    r.add_argument("--expr", required=True)
    r.add_argument("--env", action="append", metavar="NAME=VALUE")
    r.add_argument("--globals", help="comma-separated names to capture in addition")
    r.add_argument("--seed", type=int, help="session seed; also gives the future an RNG stream")
    r.add_argument("--rng-misuse", default="warning", choices=["warning", "error", "ignore"])
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("demo", help="demonstrations")
    dsub = d.add_subparsers(dest="demo", parser_class=_Parser)
    dm = dsub.add_parser("map", help="chunked parallel map")
    dm.add_argument("--plan", default="sequential")
    dm.add_argument("--n", type=int, default=10)
    dm.add_argument("--seed", type=int)
    dm.add_argument("--chunks", default="auto")
    dm.set_defaults(func=cmd_demo_map)

    c = sub.add_parser("conformance", help="backend conformance suite")
    csub = c.add_subparsers(dest="action", parser_class=_Parser)
    cr = csub.add_parser("run")
    cr.add_argument("--plan", required=True)
    cr.add_argument("--filter", help="glob over check ids")
    cr.add_argument("--report", help="write the JSON report here")
    cr.set_defaults(func=cmd_conformance)

    g = sub.add_parser("rng", help="random number streams")
    gsub = g.add_subparsers(dest="action", parser_class=_Parser)
    gd = gsub.add_parser("dump", help="print uniforms of one stream")
    gd.add_argument("--stream", type=int, default=0)
    gd.add_argument("--n", type=int, default=10)
    gd.add_argument("--seed", type=int, help="session seed (default: the all-12345 state)")
    gd.set_defaults(func=cmd_rng_dump)

    b = sub.add_parser("bench", help="sleeping-task speedup versus sequential")
    b.add_argument("--plan", required=True)
    b.add_argument("--tasks", type=int, default=8)
    b.add_argument("--task-ms", type=int, default=300)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(parser.format_usage().strip())
        if getattr(args, "chunks", "auto") != "auto":
            try:
                args.chunks = int(args.chunks)
            except ValueError:
                raise UsageError("--chunks must be 'auto' or an integer") from None
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except EvalError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_EVAL
    except FutureError as e:
        print(f"FutureError: {e.message}", file=sys.stderr)
        return EXIT_FUTURE
