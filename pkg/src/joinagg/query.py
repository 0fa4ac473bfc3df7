"""Join-aggregate queries as hypergraphs with a set of output attributes."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence


class QueryError(ValueError):
    """A query is malformed or fails a structural precondition."""


class CyclicQueryError(QueryError):
    def __init__(self, message: str, residue: Sequence[str] = ()) -> None:
        super().__init__(message)
        self.residue = tuple(residue)


@dataclass(frozen=True)
class Edge:
    """A relation symbol: a name plus an ordered attribute list."""

    name: str
    schema: tuple[str, ...]

    @property
    def attrs(self) -> frozenset[str]:
        return frozenset(self.schema)

    def without(self, attr: str) -> "Edge":
        return Edge(self.name, tuple(a for a in self.schema if a != attr))

    def with_attr(self, attr: str) -> "Edge":
        return Edge(self.name, self.schema + (attr,))


@dataclass(frozen=True)
class Query:
    attrs: tuple[str, ...]
    edges: tuple[Edge, ...]
    output: frozenset[str]

    def __post_init__(self) -> None:
        if len(set(self.attrs)) != len(self.attrs):
            raise QueryError("duplicate attribute names")
        names = [e.name for e in self.edges]
        if len(set(names)) != len(names):
            raise QueryError("duplicate relation names")
        known = set(self.attrs)
        used: set[str] = set()
        for e in self.edges:
            if len(set(e.schema)) != len(e.schema):
                raise QueryError(f"relation {e.name} repeats an attribute")
            unknown = set(e.schema) - known
            if unknown:
                raise QueryError(
                    f"relation {e.name} uses undeclared attributes {sorted(unknown)}"
                )
            used |= set(e.schema)
        if used != known:
            raise QueryError(f"attributes {sorted(known - used)} occur in no relation")
        if not self.output <= known:
            raise QueryError(f"output attributes {sorted(self.output - known)} unknown")

    @classmethod
    def build(
        cls,
        relations: Iterable[tuple[str, Sequence[str]]],
        output: Iterable[str],
        attrs: Sequence[str] | None = None,
    ) -> "Query":
        edges = tuple(Edge(name, tuple(schema)) for name, schema in relations)
        if attrs is None:
            seen: dict[str, None] = {}
            for e in edges:
                for a in e.schema:
                    seen.setdefault(a)
            attrs = tuple(seen)
        return cls(tuple(attrs), edges, frozenset(output))

    @property
    def output_order(self) -> tuple[str, ...]:
        return tuple(a for a in self.attrs if a in self.output)

    def edge_index(self, name: str) -> int:
        for i, e in enumerate(self.edges):
            if e.name == name:
                return i
        raise KeyError(name)

    def edge(self, name: str) -> Edge:
        return self.edges[self.edge_index(name)]

    def occurrences(self) -> dict[str, list[int]]:
        occ: dict[str, list[int]] = {a: [] for a in self.attrs}
        for i, e in enumerate(self.edges):
            for a in e.schema:
                occ[a].append(i)
        return occ

    def unique_attrs(self) -> frozenset[str]:
        return frozenset(a for a, ids in self.occurrences().items() if len(ids) == 1)

    def restrict(self, edge_ids: Iterable[int]) -> "Query":
        """Subquery over the chosen edges; output is narrowed accordingly."""
        edges = tuple(self.edges[i] for i in sorted(edge_ids))
        present = set().union(*(e.attrs for e in edges)) if edges else set()
        attrs = tuple(a for a in self.attrs if a in present)
        return Query(attrs, edges, self.output & frozenset(attrs))

    def replace_edges(self, edges: Sequence[Edge], output: Iterable[str] | None = None) -> "Query":
        present: set[str] = set()
        for e in edges:
            present |= e.attrs
        attrs = [a for a in self.attrs if a in present]
        attrs += sorted(present - set(attrs))
        out = self.output if output is None else frozenset(output)
        return Query(tuple(attrs), tuple(edges), out & frozenset(attrs))


def edges_containing(q: Query, attr: str) -> list[int]:
    if attr not in q.attrs:
        raise QueryError(f"unknown attribute {attr!r}")
    return [i for i, e in enumerate(q.edges) if attr in e.attrs]


def induced_subquery(q: Query, s: Iterable[str]) -> Query:
    keep = frozenset(s)
    unknown = keep - set(q.attrs)
    if unknown:
        raise QueryError(f"unknown attributes {sorted(unknown)}")
    edges = []
    for e in q.edges:
        schema = tuple(a for a in e.schema if a in keep)
        if schema:
            edges.append(Edge(e.name, schema))
    attrs = tuple(a for a in q.attrs if a in keep)
    return Query(attrs, tuple(edges), q.output & keep)


def exists_connected_components(q: Query) -> list[list[int]]:
    """Partition edge ids by connectivity through shared non-output attributes."""
    parent = list(range(len(q.edges)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, ids in q.occurrences().items():
        if a in q.output:
            continue
        for j in ids[1:]:
            ri, rj = find(ids[0]), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(len(q.edges)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _contained_pair(q: Query) -> tuple[int, int] | None:
    """First (small, host) pair with small ⊆ host; equal sets fold into the lower id."""
    for i, e in enumerate(q.edges):
        for j, f in enumerate(q.edges):
            if i == j:
                continue
            if e.attrs < f.attrs or (e.attrs == f.attrs and j < i):
                return i, j
    return None


def is_cleansed(q: Query) -> bool:
    if q.unique_attrs() - q.output:
        return False
    return _contained_pair(q) is None


def is_separated(q: Query) -> bool:
    unique = q.unique_attrs()
    if not q.output <= unique or not unique <= q.output:
        return False
    if len(q.edges) == 1:
        return True
    for i, e in enumerate(q.edges):
        if not e.attrs & q.output:
            continue
        core = e.attrs - q.output
        if not any(core <= f.attrs for j, f in enumerate(q.edges) if j != i):
            return False
    return True


@dataclass(frozen=True)
class CleanseStep:
    kind: str  # "aggregate" or "absorb"
    edge: str
    attr: str | None = None
    into: str | None = None


def cleanse_structure(q: Query) -> tuple[Query, list[CleanseStep]]:
    """Drop unique non-output attributes and absorb contained relations until fixpoint."""
    steps: list[CleanseStep] = []
    edges = list(q.edges)
    while True:
        current = q.replace_edges(edges)
        occ = current.occurrences()
        victim = next(
            (a for a in current.attrs if len(occ[a]) == 1 and a not in q.output), None
        )
        if victim is not None:
            i = occ[victim][0]
            steps.append(CleanseStep("aggregate", edges[i].name, attr=victim))
            edges[i] = edges[i].without(victim)
            continue
        pair = _contained_pair(current)
        if pair is not None:
            small, host = pair
            steps.append(CleanseStep("absorb", edges[small].name, into=edges[host].name))
            del edges[small]
            continue
        return current, steps


def is_hierarchical(q: Query) -> bool:
    occ = {a: frozenset(ids) for a, ids in q.occurrences().items()}
    for a, b in combinations(q.attrs, 2):
        ea, eb = occ[a], occ[b]
        if not (ea <= eb or eb <= ea or not ea & eb):
            return False
    return True


def is_a_hierarchical(q: Query) -> bool:
    from .decomposition import require_acyclic

    require_acyclic(q)
    cleansed, _ = cleanse_structure(q)
    return all(
        is_hierarchical(cleansed.restrict(ids))
        for ids in exists_connected_components(cleansed)
    )
