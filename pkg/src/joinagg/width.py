"""Width measures of acyclic join-aggregate queries."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .decomposition import gyo_join_tree, CyclicReport, require_acyclic
from .query import (
    CyclicQueryError,
    Query,
    cleanse_structure,
    exists_connected_components,
    is_a_hierarchical,
)


def rho_star_acyclic(q: Query, s: Iterable[str]) -> tuple[int, list[int]]:
    """Minimum number of relations covering ``s``, with one witness (edge ids).

    Greedy: discard relations contained in others (among equal sets the
    lower id goes), then take the lowest-id relation owning an attribute no
    other relation has, delete its attributes, and repeat.
    """
    target = frozenset(s)
    live = {i: e.attrs & target for i, e in enumerate(q.edges) if e.attrs & target}
    cover: list[int] = []
    while live:
        for i in sorted(live):
            if any(
                live[i] < live[j] or (live[i] == live[j] and i < j)
                for j in live
                if j != i
            ):
                del live[i]
        counts: dict[str, int] = {}
        for attrs in live.values():
            for a in attrs:
                counts[a] = counts.get(a, 0) + 1
        pick = next((i for i in sorted(live) if any(counts[a] == 1 for a in live[i])), None)
        if pick is None:
            raise CyclicQueryError("induced subquery is cyclic")
        taken = live.pop(pick)
        cover.append(pick)
        live = {i: attrs - taken for i, attrs in live.items() if attrs - taken}
    return len(cover), sorted(cover)


def rho_star_exhaustive(q: Query, s: Iterable[str]) -> int:
    """Smallest integral cover by trying every subset; reference for small queries."""
    target = frozenset(s)
    if not target:
        return 0
    sets = [e.attrs & target for e in q.edges]
    for size in range(1, len(sets) + 1):
        for combo in combinations(sets, size):
            if frozenset().union(*combo) >= target:
                return size
    raise ValueError("attributes not coverable")


def _cleansed_components(q: Query) -> list[Query]:
    require_acyclic(q)
    parts = []
    for ids in exists_connected_components(q):
        cleansed, _ = cleanse_structure(q.restrict(ids))
        parts.append(cleansed)
    return parts


def component_fn_fhtw(q: Query) -> tuple[int, list[int]]:
    """Width of a cleansed, connected query and the covering relations."""
    return rho_star_acyclic(q, q.output)


def fn_fhtw(q: Query) -> int:
    return max([1] + [component_fn_fhtw(c)[0] for c in _cleansed_components(q)])


def freew(q: Query) -> int:
    best = 1
    for c in _cleansed_components(q):
        unique_out = c.unique_attrs() & c.output
        best = max(best, sum(1 for e in c.edges if e.attrs & unique_out))
    return best


def projw(q: Query) -> int:
    return max([1] + [len(c.edges) for c in _cleansed_components(q)])


def is_line_query(q: Query) -> list[str] | None:
    """Attribute order A1..A(k+1) if ``q`` is a line query with outputs at both ends."""
    if len(q.edges) < 2 or any(len(e.schema) != 2 for e in q.edges):
        return None
    occ = q.occurrences()
    ends = [a for a, ids in occ.items() if len(ids) == 1]
    if len(ends) != 2 or any(len(ids) > 2 for ids in occ.values()):
        return None
    if q.output != frozenset(ends):
        return None
    if len(q.attrs) != len(q.edges) + 1:
        return None
    start = min(ends, key=q.attrs.index)
    path = [start]
    used: set[int] = set()
    while len(path) < len(q.attrs):
        step = next((i for i in occ[path[-1]] if i not in used), None)
        if step is None:
            return None
        used.add(step)
        nxt = next(a for a in q.edges[step].schema if a != path[-1])
        path.append(nxt)
    return path if len(used) == len(q.edges) else None


@dataclass
class WidthReport:
    acyclic: bool
    fn_fhtw: int | None = None
    freew: int | None = None
    projw: int | None = None
    free_connex: bool | None = None
    a_hierarchical: bool | None = None
    covering_edges: list[str] = field(default_factory=list)
    components: int | None = None
    cyclic_residue: list[str] = field(default_factory=list)

    @property
    def exponent(self) -> Fraction | None:
        if self.fn_fhtw is None:
            return None
        return 1 - Fraction(1, self.fn_fhtw)

    def to_dict(self) -> dict:
        data = asdict(self)
        exp = self.exponent
        data["exponent"] = None if exp is None else str(exp)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def analyze(q: Query) -> WidthReport:
    tree = gyo_join_tree(q)
    if isinstance(tree, CyclicReport):
        return WidthReport(acyclic=False, cyclic_residue=list(tree.residue))
    cover: list[str] = []
    for c in _cleansed_components(q):
        _, ids = component_fn_fhtw(c)
        cover += [c.edges[i].name for i in ids]
    width = fn_fhtw(q)
    return WidthReport(
        acyclic=True,
        fn_fhtw=width,
        freew=freew(q),
        projw=projw(q),
        free_connex=width == 1,
        a_hierarchical=is_a_hierarchical(q),
        covering_edges=sorted(cover),
        components=len(exists_connected_components(q)),
    )

