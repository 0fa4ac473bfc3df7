"""Command-line entry point: ``joinagg analyze | run | gen | bench``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from .bench import load_config, rows_to_csv, run_sweeps, slopes
from .decomposition import require_acyclic
from .driver import ALGORITHMS, evaluate
from .generators import FAMILIES, GeneratorSpec, generate
from .hybrid import HybridInvariantError
from .io import format_relation, load_instance, read_query, write_instance
from .query import CyclicQueryError, QueryError
from .relation import BudgetExceeded, SchemaError
from .semiring import SEMIRINGS, get_semiring
from .width import analyze

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CYCLIC = 3
EXIT_SCHEMA = 4
EXIT_RUNTIME = 5


@dataclass
class RunReport:
    classification: dict
    algorithm: str
    OUT: int
    stats: dict
    wall_time: float
    output: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _seed(value: int) -> int:
    override = os.environ.get("JOINAGG_SEED")
    return int(override) if override else value


def cmd_analyze(args: argparse.Namespace) -> int:
    report = analyze(read_query(args.query))
    if args.json:
        print(report.to_json())
        return EXIT_OK
    if not report.acyclic:
        print("cyclic")
        print("irreducible relations: " + ", ".join(report.cyclic_residue))
        return EXIT_OK
    kind = "free-connex" if report.free_connex else "acyclic, not free-connex"
    print(f"classification: {kind}")
    print(f"a-hierarchical: {'yes' if report.a_hierarchical else 'no'}")
    print(f"components: {report.components}")
    print(f"freew: {report.freew}")
    print(f"fn-fhtw: {report.fn_fhtw}")
    print(f"projw: {report.projw}")
    print(f"covering relations: {', '.join(report.covering_edges)}")
    print(f"predicted exponent of OUT: {report.exponent}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    sr = get_semiring(args.semiring)
    q = read_query(args.query)
    require_acyclic(q)
    inst = load_instance(q, args.data, sr)
    trace = (lambda line: print(line, file=sys.stderr)) if args.trace else None
    start = time.perf_counter()
    result, stats = evaluate(
        q,
        inst,
        sr,
        out_guess=args.out_guess,
        algorithm=args.algorithm,
        trace=trace,
        threads=args.threads,
        root=args.root,
    )
    elapsed = time.perf_counter() - start
    text = format_relation(result, sr)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    report = RunReport(
        analyze(q).to_dict(),
        args.algorithm,
        len(result),
        stats.to_dict(),
        round(elapsed, 6),
        args.output or "-",
    )
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    if args.stats:
        print(report.to_json(), file=sys.stderr)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    sr = get_semiring(args.semiring)
    spec = GeneratorSpec(args.family, args.N, args.OUT, args.k, _seed(args.seed))
    q, inst = generate(spec, sr)
    write_instance(args.out, q, inst, sr)
    size = sum(len(r) for r in inst.values())
    print(f"wrote {len(inst)} relations ({size} rows) and query.json to {args.out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    override = os.environ.get("JOINAGG_SEED")
    rows = run_sweeps(load_config(args.spec), int(override) if override else None)
    text = rows_to_csv(rows)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    for (family, k, algorithm), slope in sorted(slopes(rows).items()):
        print(f"{family} k={k} {algorithm}: slope {slope:.3f}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="joinagg", description="Evaluate acyclic join-aggregate queries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="classify a query and print its widths")
    p.add_argument("query")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="evaluate a query on CSV data")
    p.add_argument("query")
    p.add_argument("data", help="directory holding <relation>.csv files")
    p.add_argument("--semiring", default="counting", choices=sorted(SEMIRINGS))
    p.add_argument("--algorithm", default="auto", choices=ALGORITHMS)
    p.add_argument("--out-guess", type=int, default=None, help="output size estimate; doubling when absent")
    p.add_argument("--output", "-o", default=None, help="result CSV path (default stdout)")
    p.add_argument("--report", default=None, help="write the run report as JSON here")
    p.add_argument("--stats", action="store_true", help="print the run report to stderr")
    p.add_argument("--trace", action="store_true", help="log engine decisions to stderr")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--root", type=int, default=0, help="root node for --algorithm yannakakis")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="write a generated instance to a directory")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--OUT", type=int, default=0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--semiring", default="counting", choices=sorted(SEMIRINGS))
    p.add_argument("--out", required=True, help="target directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run scaling sweeps from a JSON config")
    p.add_argument("spec")
    p.add_argument("--output", "-o", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CyclicQueryError as exc:
        print(f"error: cyclic query: {exc}", file=sys.stderr)
        return EXIT_CYCLIC
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (QueryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, HybridInvariantError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
