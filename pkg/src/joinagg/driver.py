"""End-to-end evaluation of acyclic join-aggregate queries.

Pipeline: drop dangling tuples, split into components that only share output
attributes, clean each component up, make it separated, evaluate it with the
best engine for its shape, undo the renaming, and join the component results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .decomposition import CyclicReport, gyo_join_tree, require_acyclic, separated_join_tree
from .hybrid import Observer, doubling, run_hybrid
from .line import run_line
from .query import Edge, Query, QueryError, cleanse_structure, exists_connected_components, is_cleansed, is_separated
from .relation import (
    Relation,
    RunStats,
    check_instance,
    derived_relations,
    full_reducer,
    input_size,
    join,
    project_aggregate,
)
from .semiring import Semiring
from .width import component_fn_fhtw, is_line_query
from .yannakakis import run_tree, yannakakis

ALGORITHMS = ("auto", "yannakakis", "line", "hybrid")


@dataclass(frozen=True)
class CopyOutput:
    """``copy`` duplicates output attribute ``attr`` inside one relation."""

    copy: str
    attr: str


@dataclass(frozen=True)
class EncodeOutputs:
    """``code`` holds the tuple of values of ``attrs`` in a new relation."""

    code: str
    attrs: tuple[str, ...]
    relation: str


@dataclass
class RewriteLog:
    steps: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def playback(self, result: Relation) -> Relation:
        """Map a result over the rewritten outputs back to the original ones."""
        for step in reversed(self.steps):
            if isinstance(step, EncodeOutputs):
                i = result.schema.index(step.code)
                schema = result.schema[:i] + step.attrs + result.schema[i + 1 :]
                rows = {row[:i] + row[i] + row[i + 1 :]: w for row, w in result.rows.items()}
                result = Relation(schema, rows)
            else:
                result = result.rename({step.copy: step.attr})
        return result


def _cleanse_data(
    q: Query, inst: Mapping[str, Relation], sr: Semiring, stats: RunStats | None
) -> tuple[Query, dict[str, Relation]]:
    cleansed, steps = cleanse_structure(q)
    data = {e.name: inst[e.name] for e in q.edges}
    for step in steps:
        if step.kind == "aggregate":
            data[step.edge] = project_aggregate(data[step.edge], [step.attr], sr, stats)
        else:
            host = data[step.into]
            data[step.into] = join(host, data.pop(step.edge), sr, stats).reorder(host.schema)
    return cleansed, {e.name: data[e.name] for e in cleansed.edges}


def cleanse(
    q: Query, inst: Mapping[str, Relation], sr: Semiring, stats: RunStats | None = None
) -> tuple[Query, dict[str, Relation]]:
    """Aggregate away unique non-output attributes and fold contained relations into their hosts."""
    return _cleanse_data(q, inst, sr, stats)


def _fresh(base: str, taken: set[str]) -> str:
    name, i = base, 1
    while name in taken:
        name = f"{base}_{i}"
        i += 1
    taken.add(name)
    return name


def separate(
    q: Query, inst: Mapping[str, Relation], sr: Semiring
) -> tuple[Query, dict[str, Relation], RewriteLog]:
    """Rewrite a connected, cleansed, acyclic query so that output attributes
    are exactly its unique attributes and every output relation's remainder is
    hosted by another relation."""
    if len(exists_connected_components(q)) != 1:
        raise QueryError("separate needs a query whose relations connect through non-output attributes")
    if not is_cleansed(q):
        raise QueryError("separate needs a cleansed query")
    require_acyclic(q)
    log = RewriteLog()
    if is_separated(q):
        return q, dict(inst), log

    _, cover = component_fn_fhtw(q)
    attrs = list(q.attrs)
    taken_attrs = set(attrs)
    taken_rels = {e.name for e in q.edges}
    edges = list(q.edges)
    data = {e.name: inst[e.name] for e in q.edges}
    output = set(q.output)
    occurrences = q.occurrences()

    for a in q.output_order:
        if len(occurrences[a]) == 1:
            continue
        host = next(i for i in cover if a in q.edges[i].attrs)
        x = _fresh(f"__xA_{a}", taken_attrs)
        attrs.append(x)
        rel = data[edges[host].name]
        pos = rel.schema.index(a)
        data[edges[host].name] = Relation(
            rel.schema + (x,), {row + (row[pos],): w for row, w in rel.rows.items()}
        )
        edges[host] = edges[host].with_attr(x)
        output = (output - {a}) | {x}
        log.steps.append(CopyOutput(x, a))

    for i in range(len(edges)):
        e = edges[i]
        outs = tuple(a for a in e.schema if a in output)
        if not outs:
            continue
        core = e.attrs - output
        if any(core <= f.attrs for j, f in enumerate(edges) if j != i):
            continue
        x = _fresh(f"__xe_{e.name}", taken_attrs)
        name = _fresh(f"__sep_{e.name}", taken_rels)
        attrs.append(x)
        rel = data[e.name]
        idx = rel.positions(outs)
        rows = {}
        for row in rel.rows:
            key = tuple(row[p] for p in idx)
            rows[key + (key,)] = sr.one
        data[name] = Relation(outs + (x,), rows)
        edges.append(Edge(name, outs + (x,)))
        output = (output - set(outs)) | {x}
        log.steps.append(EncodeOutputs(x, outs, name))

    rewritten = Query(tuple(attrs), tuple(edges), frozenset(output))
    return rewritten, data, log


Trace = Callable[[str], None]


def _component(
    q: Query,
    inst: Mapping[str, Relation],
    sr: Semiring,
    algorithm: str,
    out_guess: int | None,
    budget_factor: float,
    stats: RunStats,
    trace: Trace | None,
    observer: Observer | None,
) -> Relation:
    emit = trace or (lambda line: None)
    cq, cinst = _cleanse_data(q, inst, sr, stats)
    order = q.output_order
    if not cq.edges:
        return Relation(order)
    width, _ = component_fn_fhtw(cq)
    path = is_line_query(cq)
    if algorithm == "line" and path is None:
        raise QueryError("the line engine needs a line query")
    if width <= 1 or algorithm == "yannakakis":
        emit(f"component {[e.name for e in q.edges]}: yannakakis (fn-fhtw={width})")
        result, _ = yannakakis(cq, cinst, sr, stats=stats)
        return result.reorder(order)

    if path is not None and algorithm in ("auto", "line"):
        emit(f"component {[e.name for e in q.edges]}: line engine over {'-'.join(path)}")

        def trial(guess: int, st: RunStats) -> Relation:
            return run_line(cq, cinst, sr, guess, st)[0]

    else:
        sq, sinst, log = separate(cq, cinst, sr)
        tree = separated_join_tree(sq)
        rels = derived_relations(sq, tree, sinst, sr, stats)
        emit(
            f"component {[e.name for e in q.edges]}: hybrid engine (fn-fhtw={width}, "
            f"{len(log)} rewrite steps)"
        )

        def trial(guess: int, st: RunStats) -> Relation:
            result = run_hybrid(tree, rels, sq.output, sr, guess, st, observer, trace, sq.output_order)
            return log.playback(result)

    if out_guess is None:
        result = doubling(trial, input_size(cinst), width, stats, budget_factor)
    else:
        result = trial(out_guess, stats)
    return result.reorder(order)


def _combine(parts: list[Relation], q: Query, sr: Semiring, stats: RunStats) -> Relation:
    if len(parts) == 1:
        return parts[0].reorder(q.output_order)
    names = [f"__part{i}" for i in range(len(parts))]
    combo = Query.build(
        [(n, p.schema) for n, p in zip(names, parts)], q.output, attrs=q.output_order
    )
    data = dict(zip(names, parts))
    tree = gyo_join_tree(combo)
    if isinstance(tree, CyclicReport):
        result = parts[0]
        for part in parts[1:]:
            result = join(result, part, sr, stats)
        return result.reorder(q.output_order)
    result, _ = yannakakis(combo, data, sr, tree=tree, stats=stats)
    return result


def evaluate(
    q: Query,
    inst: Mapping[str, Relation],
    sr: Semiring,
    out_guess: int | None = None,
    algorithm: str = "auto",
    stats: RunStats | None = None,
    trace: Trace | None = None,
    threads: int = 1,
    budget_factor: float = 8,
    root: int = 0,
    observer: Observer | None = None,
) -> tuple[Relation, RunStats]:
    """Evaluate ``q`` on ``inst``.

    ``algorithm`` picks the engine: ``yannakakis`` runs the classic plan on
    the whole query rooted at tree node ``root``; ``line`` and ``hybrid``
    force an engine for every component that is not free-connex; ``auto``
    uses the line engine on line components and the hybrid engine otherwise.
    Without ``out_guess`` the output size is found by doubling.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    stats = RunStats() if stats is None else stats
    check_instance(q, inst)
    tree = require_acyclic(q)
    if algorithm == "yannakakis":
        return yannakakis(q, inst, sr, tree=tree, root=root, stats=stats)

    reduced = full_reducer(q, tree, inst, sr)
    if any(not reduced[e.name].rows for e in q.edges):
        return Relation(q.output_order), stats
    groups = exists_connected_components(q)
    subqueries = [q.restrict(ids) for ids in groups]

    def work(sub: Query) -> tuple[Relation, RunStats]:
        local = RunStats()
        data = {e.name: reduced[e.name] for e in sub.edges}
        part = _component(sub, data, sr, algorithm, out_guess, budget_factor, local, trace, observer)
        return part, local

    if threads > 1 and len(subqueries) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, subqueries))
    else:
        outcomes = [work(sub) for sub in subqueries]
    for _, local in outcomes:
        stats.absorb(local)
    result = _combine([part for part, _ in outcomes], q, sr, stats)
    return result, stats
