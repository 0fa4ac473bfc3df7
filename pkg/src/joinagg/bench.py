"""Scaling sweeps: generate instances, run each engine, fit log-log slopes."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .driver import evaluate
from .generators import GeneratorSpec, generate
from .semiring import COUNTING, Semiring


@dataclass
class BenchRow:
    family: str
    k: int
    N: int
    OUT_target: int
    OUT: int
    algorithm: str
    max_intermediate_rows: int
    total_rows_materialized: int
    semiring_ops: int
    seconds: float


COLUMNS = tuple(BenchRow.__dataclass_fields__)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    if len(xs) < 2:
        raise ValueError("need at least two points to fit a slope")
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def measure(
    spec: GeneratorSpec,
    algorithms: Iterable[str],
    sr: Semiring = COUNTING,
    true_guess: bool = True,
) -> list[BenchRow]:
    """One row per algorithm; with ``true_guess`` the engines get the exact output size."""
    q, inst = generate(spec, sr)
    n = sum(len(r) for r in inst.values())
    guess = len(evaluate(q, inst, sr)[0]) if true_guess else None
    rows = []
    for algorithm in algorithms:
        start = time.perf_counter()
        result, stats = evaluate(q, inst, sr, out_guess=guess, algorithm=algorithm)
        elapsed = time.perf_counter() - start
        rows.append(
            BenchRow(
                spec.family,
                spec.k,
                n,
                spec.OUT,
                len(result),
                algorithm,
                stats.max_intermediate_rows,
                stats.total_rows_materialized,
                stats.semiring_ops,
                round(elapsed, 4),
            )
        )
    return rows


def run_sweeps(config: dict, seed: int | None = None) -> list[BenchRow]:
    """``config = {"sweeps": [{"family", "N", "OUT": [...], "k", "seed", "algorithms"}]}``."""
    rows: list[BenchRow] = []
    for sweep in config["sweeps"]:
        outs = sweep["OUT"] if isinstance(sweep["OUT"], list) else [sweep["OUT"]]
        for target in outs:
            spec = GeneratorSpec(
                sweep["family"],
                int(sweep["N"]),
                int(target),
                int(sweep.get("k", 3)),
                int(seed if seed is not None else sweep.get("seed", 0)),
            )
            rows += measure(spec, sweep.get("algorithms", ["yannakakis", "auto"]), true_guess=sweep.get("true_guess", True))
    return rows


def slopes(rows: Iterable[BenchRow], metric: str = "max_intermediate_rows") -> dict[tuple[str, int, str], float]:
    """Fitted exponent of ``metric`` against OUT per (family, k, algorithm)."""
    groups: dict[tuple[str, int, str], list[BenchRow]] = {}
    for row in rows:
        groups.setdefault((row.family, row.k, row.algorithm), []).append(row)
    fitted = {}
    for key, members in groups.items():
        if len({m.OUT for m in members}) >= 2:
            fitted[key] = fit_slope([m.OUT for m in members], [getattr(m, metric) for m in members])
    return fitted


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    lines = [",".join(COLUMNS)]
    for row in rows:
        lines.append(",".join(str(v) for v in asdict(row).values()))
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
