"""Heavy/light evaluation of line queries R1(A1,A2) ⋈ ... ⋈ Rk(Ak,Ak+1).

Walking left to right, ``T_i`` holds the aggregated paths from A1 to
A(i+1) that stayed light so far.  An A(i+1) value is heavy when more than
⌈√OUT~⌉ distinct A1 values reach it.  Paths whose first heavy value sits at
level i are evaluated separately with the Yannakakis plan rooted at R1; the
all-light remainder is finished with one last join.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt
from typing import Mapping

from .decomposition import JoinTree, TreeNode
from .query import Query, QueryError
from .relation import (
    Relation,
    RunStats,
    group_count,
    join,
    keep_only,
    merge_results,
    semi_join_keys,
)
from .semiring import Semiring
from .width import is_line_query
from .yannakakis import run_tree


def ceil_sqrt(n: int) -> int:
    r = isqrt(n)
    return r if r * r == n else r + 1


def line_relations(q: Query, inst: Mapping[str, Relation]) -> tuple[list[str], list[Relation]]:
    """Attribute path and the relations reordered as (A_i, A_{i+1})."""
    path = is_line_query(q)
    if path is None:
        raise QueryError("not a line query")
    rels = []
    for i in range(len(path) - 1):
        pair = {path[i], path[i + 1]}
        edge = next(e for e in q.edges if e.attrs == pair)
        rels.append(inst[edge.name].reorder((path[i], path[i + 1])))
    return path, rels


def classify_heavy(t: Relation, attr: str, threshold: int) -> tuple[set, set]:
    """Split the values of ``attr`` in ``t`` by how many rows carry them."""
    heavy, light = set(), set()
    for (value,), count in group_count(t, [attr]).items():
        (heavy if count > threshold else light).add(value)
    return heavy, light


@dataclass
class LineLevel:
    heavy: set = field(default_factory=set)
    light: set = field(default_factory=set)
    t_rows: int = 0


def _path_tree(path: list[str]) -> JoinTree:
    nodes = tuple(TreeNode(i, frozenset(path[i : i + 2])) for i in range(len(path) - 1))
    links = frozenset((i, i + 1) for i in range(len(nodes) - 1))
    return JoinTree(nodes, links)


def run_line(
    q: Query,
    inst: Mapping[str, Relation],
    sr: Semiring,
    out_guess: int,
    stats: RunStats | None = None,
    levels: list[LineLevel] | None = None,
) -> tuple[Relation, RunStats]:
    stats = RunStats() if stats is None else stats
    path, rels = line_relations(q, inst)
    k = len(rels)
    threshold = ceil_sqrt(max(1, out_guess))
    tree = _path_tree(path)
    ends = (path[0], path[-1])
    parts: list[Relation] = []
    lights: list[Relation] = []
    t = rels[0]
    for i in range(k - 1):
        attr = path[i + 1]
        heavy, light = classify_heavy(t, attr, threshold)
        if levels is not None:
            levels.append(LineLevel(heavy, light, len(t)))
        heavy_keys = {(v,) for v in heavy}
        light_keys = {(v,) for v in light}
        r_heavy = semi_join_keys(rels[i], [attr], heavy_keys)
        if r_heavy.rows:
            chain = lights + [r_heavy] + rels[i + 1 :]
            parts.append(run_tree(tree, dict(enumerate(chain)), 0, ends, sr, stats))
        lights.append(semi_join_keys(rels[i], [attr], light_keys))
        s = semi_join_keys(t, [attr], light_keys)
        t = keep_only(join(s, rels[i + 1], sr, stats), (path[0], path[i + 2]), sr, stats)
    parts.append(t)
    result = merge_results(parts, sr, stats, schema=ends)
    return result.reorder(q.output_order), stats
