"""The classic Yannakakis plan over a rooted join tree."""

from __future__ import annotations

from typing import Iterable, Mapping

from .decomposition import JoinTree, SubtreeView, require_acyclic
from .query import Query
from .relation import (
    Relation,
    RunStats,
    derived_relations,
    join,
    keep_only,
    project_aggregate,
    reduce_tree,
)
from .semiring import Semiring


def run_tree(
    tree: JoinTree,
    rels: Mapping[int, Relation],
    root: int,
    keep: Iterable[str],
    sr: Semiring,
    stats: RunStats | None = None,
    nodes: Iterable[int] | None = None,
) -> Relation:
    """Evaluate the join of the node relations, aggregating away everything not in ``keep``.

    Children are folded into their parent in post-order (lowest node id
    first); before a child is joined, attributes that are neither kept nor
    shared with the parent are summed out.
    """
    keep = frozenset(keep)
    order, parent = tree.rooted(root, nodes)
    work = reduce_tree(tree, dict(rels), root, order)
    if any(not work[u].rows for u in order):
        schema = tuple(a for a in _schema_union(work, order) if a in keep)
        return Relation(schema)
    for u in order[:-1]:
        p = parent[u]
        bag_p = tree.bag(p)
        child = work[u]
        child = project_aggregate(
            child, [a for a in child.schema if a not in bag_p and a not in keep], sr, stats
        )
        work[p] = join(work[p], child, sr, stats)
    return keep_only(work[root], keep, sr, stats)


def _schema_union(work: Mapping[int, Relation], order: list[int]) -> list[str]:
    seen: dict[str, None] = {}
    for u in order:
        for a in work[u].schema:
            seen.setdefault(a)
    return list(seen)


def yannakakis(
    q: Query,
    inst: Mapping[str, Relation],
    sr: Semiring,
    tree: JoinTree | None = None,
    root: int = 0,
    stats: RunStats | None = None,
) -> tuple[Relation, RunStats]:
    stats = RunStats() if stats is None else stats
    tree = require_acyclic(q) if tree is None else tree
    rels = derived_relations(q, tree, inst, sr, stats)
    result = run_tree(tree, rels, root, q.output, sr, stats)
    return result.reorder(q.output_order), stats


def evaluate_view(
    view: SubtreeView,
    rels: Mapping[int, Relation],
    output: Iterable[str],
    sr: Semiring,
    stats: RunStats | None = None,
) -> Relation:
    """Result of the subtree on the ``u1`` side of a cut edge, rooted at ``u1``.

    Kept attributes: the outputs inside the subtree plus the join attributes
    across the cut.
    """
    if view.cut is None:
        return run_tree(view.tree, rels, 0, output, sr, stats)
    u1 = view.cut[0]
    keep = (frozenset(output) & view.attrs) | view.keep
    return run_tree(view.tree, rels, u1, keep, sr, stats, nodes=view.nodes)
