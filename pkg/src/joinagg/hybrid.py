"""Output-sensitive evaluation of separated acyclic queries.

The instance is split into sub-instances (tasks).  Each task carries labels on
directed tree edges (u1, u2) that bound how many output combinations the
subtree on u1's side can produce per join key:

* small:   every key yields at most OUT~^phi combinations,
* large:   every key yields more than OUT~^phi combinations,
* limited: small, and the subtree yields at most OUT~^phi combinations overall,

where phi is the fraction of output leaves on u1's side.  A task is finished
with one Yannakakis run as soon as some leaf has a small or limited incoming
edge; otherwise an unlabeled edge is split on its heavy keys.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import count
from math import ceil
from typing import Callable, Iterable, Mapping

from .decomposition import JoinTree, separated_join_tree, view_of
from .query import Query
from .relation import (
    BudgetExceeded,
    Relation,
    RunStats,
    anti_semi_join,
    derived_relations,
    group_count,
    merge_results,
    reduce_tree,
    semi_join_keys,
)
from .semiring import Semiring
from .yannakakis import evaluate_view, run_tree


class Label(enum.Enum):
    SMALL = "small"
    LARGE = "large"
    LIMITED = "limited"


def is_small(label: Label | None) -> bool:
    return label is Label.SMALL or label is Label.LIMITED


Labels = dict[tuple[int, int], Label]


class HybridInvariantError(RuntimeError):
    """The worklist ran longer than the proven bound."""


@dataclass
class Task:
    id: int
    labels: Labels
    rels: dict[int, Relation]
    parent: int | None = None


class Observer:
    """Hooks for auditing a run; the defaults do nothing."""

    def on_label(self, tree: JoinTree, task: Task, edge: tuple[int, int], label: Label, rule: str) -> None:
        pass

    def on_split(self, tree: JoinTree, parent: Task, heavy: Task, light: Task, edge: tuple[int, int]) -> None:
        pass

    def on_finalize(self, tree: JoinTree, task: Task, root: int, result: Relation) -> None:
        pass


def saturate_limited(tree: JoinTree, labels: Labels) -> tuple[Labels, list[tuple[int, int]]]:
    """Close ``labels`` under: all other edges into u1 limited ⇒ (u1, u2) limited.

    Leaves are skipped; for them the premise would be empty.
    """
    out = dict(labels)
    added = []
    changed = True
    while changed:
        changed = False
        for u1, u2 in tree.directed_edges():
            if out.get((u1, u2)) in (Label.LIMITED, Label.LARGE):
                continue
            others = [u3 for u3 in tree.neighbors(u1) if u3 != u2]
            if others and all(out.get((u3, u1)) is Label.LIMITED for u3 in others):
                out[(u1, u2)] = Label.LIMITED
                added.append((u1, u2))
                changed = True
    return out, added


def large_reverse(labels: Labels, edge: tuple[int, int]) -> Labels:
    """Mark ``edge`` large and its reverse limited (a large reverse is kept)."""
    out = dict(labels)
    out[edge] = Label.LARGE
    back = (edge[1], edge[0])
    if out.get(back) is not Label.LARGE:
        out[back] = Label.LIMITED
    return out


def check_optimal(tree: JoinTree, labels: Labels) -> int | None:
    """Lowest leaf whose incoming edge is small or limited."""
    if len(tree.nodes) == 1:
        return 0
    for u in sorted(tree.output_leaves):
        (v,) = tree.neighbors(u)
        if is_small(labels.get((v, u))):
            return u
    return None


def splittable_edges(tree: JoinTree, labels: Labels) -> list[tuple[int, int]]:
    """Unlabeled edges (u1, u2) whose other incoming edges at u1 are all small,
    smallest u1-side subtree first."""
    found = []
    for u1, u2 in tree.directed_edges():
        if (u1, u2) in labels:
            continue
        if all(is_small(labels.get((u3, u1))) for u3 in tree.neighbors(u1) if u3 != u2):
            found.append((len(tree.side(u1, u2)), u1, u2))
    return [(u1, u2) for _, u1, u2 in sorted(found)]


def identify_leaf(tree: JoinTree, labels: Labels) -> int:
    """Find a leaf with a small incoming edge by pruning large-cut subtrees.

    Raises ValueError when no such leaf exists, which means the labels still
    admit a limited inference or a split.
    """
    alive = set(n.id for n in tree.nodes)
    while True:
        candidates = sorted(tree.output_leaves & alive)
        if len(alive) == 1:
            return next(iter(alive))
        for r in candidates:
            order, parent = tree.rooted(r, alive)
            if all(is_small(labels.get((u, parent[u]))) for u in order[:-1]):
                return r
        if not candidates:
            raise ValueError("no output leaf left")
        order, parent = tree.rooted(candidates[0], alive)
        below: dict[int, bool] = {}
        pruned = None
        for u in order[:-1]:
            kids = [v for v in tree.neighbors(u) if v in alive and parent.get(v) == u]
            inner_small = all(below[v] and is_small(labels.get((v, u))) for v in kids)
            below[u] = inner_small
            if pruned is None and inner_small and labels.get((u, parent[u])) is Label.LARGE:
                pruned = u
        if pruned is None:
            raise ValueError("labels leave an applicable rule; premise violated")
        alive -= set(tree.rooted(pruned, alive - {parent[pruned]})[0])


def _fmt(edge: tuple[int, int]) -> str:
    return f"(u{edge[0]},u{edge[1]})"


def run_hybrid(
    tree: JoinTree,
    rels: Mapping[int, Relation],
    output: Iterable[str],
    sr: Semiring,
    out_guess: int,
    stats: RunStats | None = None,
    observer: Observer | None = None,
    trace: Callable[[str], None] | None = None,
    output_order: Iterable[str] | None = None,
) -> Relation:
    stats = RunStats() if stats is None else stats
    observer = observer or Observer()
    emit = trace or (lambda line: None)
    output = frozenset(output)
    order = tuple(output_order) if output_order is not None else tuple(sorted(output))
    leaves = sorted(tree.output_leaves)
    if len(leaves) <= 1:
        root = leaves[0] if leaves else 0
        emit(f"single output leaf: yannakakis rooted at u{root}")
        stats.tasks_finalized += 1
        return run_tree(tree, rels, root, output, sr, stats).reorder(order)

    width = len(leaves)
    guess = max(1, out_guess)
    ids = count()
    start = Task(next(ids), {}, reduce_tree(tree, dict(rels)))
    worklist = [start]
    results: list[Relation] = []
    bound = 2 ** (len(tree.directed_edges()) + 1)
    iterations = 0
    while worklist:
        iterations += 1
        if iterations > bound:
            raise HybridInvariantError(f"worklist exceeded {bound} iterations")
        task = worklist.pop()
        task.labels, added = saturate_limited(tree, task.labels)
        for edge in added:
            emit(f"task {task.id}: {_fmt(edge)} limited (inferred)")
            observer.on_label(tree, task, edge, Label.LIMITED, "limited-imply-limited")
        leaf = check_optimal(tree, task.labels)
        if leaf is None:
            candidates = splittable_edges(tree, task.labels)
            if not candidates:
                # only reachable when OUT~ underestimates OUT
                stats.fallbacks += 1
                leaf = leaves[0]
                emit(f"task {task.id}: no rule applies, falling back to u{leaf}")
        if leaf is not None:
            emit(f"task {task.id}: yannakakis rooted at leaf u{leaf}")
            result = run_tree(tree, task.rels, leaf, output, sr, stats)
            stats.tasks_finalized += 1
            observer.on_finalize(tree, task, leaf, result)
            results.append(result)
            continue

        u1, u2 = candidates[0]
        view = view_of(tree, u1, u2)
        sub = evaluate_view(view, task.rels, output, sr, stats)
        key_attrs = tuple(a for a in task.rels[u1].schema if a in view.keep)
        leaves_here = len(view.leaf_set)
        bar = guess**leaves_here
        heavy_keys = {
            key for key, c in group_count(sub, key_attrs).items() if c**width > bar
        }
        base = task.rels[u1]
        heavy = Task(
            next(ids),
            large_reverse(task.labels, (u1, u2)),
            _replace(tree, task.rels, u1, semi_join_keys(base, key_attrs, heavy_keys)),
            task.id,
        )
        light_labels = dict(task.labels)
        light_labels[(u1, u2)] = Label.SMALL
        light = Task(
            next(ids),
            light_labels,
            _replace(tree, task.rels, u1, anti_semi_join(base, key_attrs, heavy_keys)),
            task.id,
        )
        stats.splits += 1
        emit(
            f"task {task.id}: split {_fmt((u1, u2))} phi={leaves_here}/{width} "
            f"heavy keys={len(heavy_keys)} -> task {heavy.id} large, task {light.id} small"
        )
        observer.on_split(tree, task, heavy, light, (u1, u2))
        observer.on_label(tree, heavy, (u1, u2), Label.LARGE, "split")
        if heavy.labels[(u2, u1)] is Label.LIMITED and task.labels.get((u2, u1)) is not Label.LIMITED:
            observer.on_label(tree, heavy, (u2, u1), Label.LIMITED, "large-reverse")
        observer.on_label(tree, light, (u1, u2), Label.SMALL, "split")
        for child in (light, heavy):
            if all(r.rows for r in child.rels.values()):
                worklist.append(child)
            else:
                emit(f"task {child.id}: empty, dropped")
    return merge_results([r.reorder(order) for r in results], sr, stats, schema=order)


def _replace(tree: JoinTree, rels: Mapping[int, Relation], u: int, rel: Relation) -> dict[int, Relation]:
    out = dict(rels)
    out[u] = rel
    return reduce_tree(tree, out)


def hybrid_yannakakis(
    q: Query,
    inst: Mapping[str, Relation],
    sr: Semiring,
    out_guess: int,
    stats: RunStats | None = None,
    observer: Observer | None = None,
    trace: Callable[[str], None] | None = None,
) -> tuple[Relation, RunStats]:
    stats = RunStats() if stats is None else stats
    tree = separated_join_tree(q)
    rels = derived_relations(q, tree, inst, sr, stats)
    result = run_hybrid(
        tree, rels, q.output, sr, out_guess, stats, observer, trace, q.output_order
    )
    return result, stats


def task_query(tree: JoinTree, rels: Mapping[int, Relation], output: Iterable[str]) -> tuple[Query, dict[str, Relation]]:
    """A task's sub-instance as a plain query, for checking against a reference evaluator."""
    names = {u: f"u{u}" for u in rels}
    query = Query.build(
        [(names[u], rels[u].schema) for u in sorted(rels)],
        frozenset(output) & frozenset().union(*(set(r.schema) for r in rels.values())),
    )
    return query, {names[u]: rels[u] for u in rels}


def budget_for(n: int, guess: int, width: int, c: float) -> int:
    return int(ceil(c * (n * guess ** (1 - 1 / width) + guess)))


def doubling(
    run_trial: Callable[[int, RunStats], Relation],
    n: int,
    width: int,
    stats: RunStats,
    c: float = 8,
) -> Relation:
    """Retry with OUT~ = 1, 2, 4, ... until a trial fits its row budget."""
    i = 0
    while True:
        guess = 2**i
        trial = RunStats(budget=budget_for(n, guess, width, c))
        try:
            result = run_trial(guess, trial)
        except BudgetExceeded:
            trial.budget = None
            stats.absorb(trial)
            stats.trials += 1
            i += 1
            continue
        trial.budget = None
        stats.absorb(trial)
        stats.trials += 1
        return result


def run_with_doubling(
    q: Query, inst: Mapping[str, Relation], sr: Semiring, c: float = 8
) -> tuple[Relation, RunStats]:
    from .driver import evaluate

    return evaluate(q, inst, sr, algorithm="auto", out_guess=None, budget_factor=c)

