"""Annotated relations, the relational kernel, and run instrumentation.

A relation maps each distinct tuple to its annotation.  Materializing
operations (join, aggregation, derived projections) report their output size
to a ``RunStats``; filters (semi-joins) shrink existing relations and are not
counted as materialization.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from . import kernels
from .decomposition import JoinTree, assign_edges
from .query import Query, QueryError
from .semiring import Semiring


class SchemaError(ValueError):
    """Instance data does not match the query schema."""


class BudgetExceeded(RuntimeError):
    """A run materialized more rows than its budget allows."""


@dataclass
class RunStats:
    max_intermediate_rows: int = 0
    total_rows_materialized: int = 0
    semiring_ops: int = 0
    tasks_finalized: int = 0
    splits: int = 0
    fallbacks: int = 0
    trials: int = 0
    budget: int | None = None

    def record(self, rows: int, ops: int = 0) -> None:
        self.total_rows_materialized += rows
        self.semiring_ops += ops
        if rows > self.max_intermediate_rows:
            self.max_intermediate_rows = rows
        if self.budget is not None and self.total_rows_materialized > self.budget:
            raise BudgetExceeded(
                f"materialized {self.total_rows_materialized} rows, budget {self.budget}"
            )

    def remaining(self) -> int:
        if self.budget is None:
            return sys.maxsize
        return max(0, self.budget - self.total_rows_materialized)

    def absorb(self, other: "RunStats") -> None:
        self.total_rows_materialized += other.total_rows_materialized
        self.semiring_ops += other.semiring_ops
        self.max_intermediate_rows = max(self.max_intermediate_rows, other.max_intermediate_rows)
        self.tasks_finalized += other.tasks_finalized
        self.splits += other.splits
        self.fallbacks += other.fallbacks
        self.trials += other.trials

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("budget")
        return data


def value_key(v: object) -> tuple:
    """Total order over mixed int/str values (ints first)."""
    if isinstance(v, bool):
        return (0, int(v), "")
    if isinstance(v, int):
        return (0, v, "")
    if isinstance(v, str):
        return (1, 0, v)
    if isinstance(v, tuple):
        return (2, 0, tuple(value_key(x) for x in v))
    return (3, 0, repr(v))


def row_key(row: tuple) -> tuple:
    return tuple(value_key(v) for v in row)


class Relation:
    __slots__ = ("schema", "rows")

    def __init__(self, schema: Sequence[str], rows: dict | None = None) -> None:
        self.schema = tuple(schema)
        self.rows = {} if rows is None else rows

    @classmethod
    def from_pairs(
        cls, schema: Sequence[str], pairs: Iterable[tuple[tuple, object]], sr: Semiring
    ) -> "Relation":
        """Build from (tuple, annotation) pairs; repeated tuples are merged with plus."""
        schema = tuple(schema)
        rows: dict = {}
        for row, w in pairs:
            row = tuple(row)
            if len(row) != len(schema):
                raise SchemaError(f"row {row} does not fit schema {schema}")
            rows[row] = sr.plus(rows[row], w) if row in rows else w
        return cls(schema, rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __repr__(self) -> str:
        return f"Relation({self.schema}, {len(self.rows)} rows)"

    def positions(self, attrs: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.schema.index(a) for a in attrs)

    def common(self, other: "Relation") -> tuple[str, ...]:
        theirs = set(other.schema)
        return tuple(a for a in self.schema if a in theirs)

    def reorder(self, schema: Sequence[str]) -> "Relation":
        schema = tuple(schema)
        if schema == self.schema:
            return self
        if sorted(schema) != sorted(self.schema):
            raise SchemaError(f"cannot reorder {self.schema} as {schema}")
        idx = self.positions(schema)
        return Relation(schema, {tuple(r[i] for i in idx): w for r, w in self.rows.items()})

    def rename(self, mapping: Mapping[str, str]) -> "Relation":
        return Relation(tuple(mapping.get(a, a) for a in self.schema), self.rows)

    def sorted_items(self) -> list[tuple[tuple, object]]:
        return sorted(self.rows.items(), key=lambda item: row_key(item[0]))

    def copy(self) -> "Relation":
        return Relation(self.schema, dict(self.rows))


Instance = dict  # relation name -> Relation


def input_size(inst: Mapping[str, Relation]) -> int:
    return sum(len(r) for r in inst.values())


def check_instance(q: Query, inst: Mapping[str, Relation]) -> None:
    for e in q.edges:
        if e.name not in inst:
            raise SchemaError(f"no data for relation {e.name}")
        rel = inst[e.name]
        if set(rel.schema) != e.attrs or len(rel.schema) != len(e.schema):
            raise SchemaError(
                f"relation {e.name} has columns {list(rel.schema)}, expected {list(e.schema)}"
            )


def join(a: Relation, b: Relation, sr: Semiring, stats: RunStats | None = None) -> Relation:
    shared = a.common(b)
    shared_set = set(shared)
    rest = tuple(x for x in b.schema if x not in shared_set)
    limit = sys.maxsize if stats is None else stats.remaining()
    rows = kernels.hash_join(
        a.rows,
        b.rows,
        a.positions(shared),
        b.positions(shared),
        b.positions(rest),
        sr.times,
        limit,
        len(a.rows) < len(b.rows),
    )
    if rows is None:
        assert stats is not None
        stats.record(limit + 1)
        raise BudgetExceeded("join output exceeds the remaining budget")
    if stats is not None:
        stats.record(len(rows), len(rows))
    return Relation(a.schema + rest, rows)


def semi_join(a: Relation, b: Relation) -> Relation:
    shared = a.common(b)
    if not shared:
        return a if b.rows else Relation(a.schema)
    keys = kernels.key_set(b.rows, b.positions(shared))
    return Relation(a.schema, kernels.filter_in(a.rows, a.positions(shared), keys))


def semi_join_keys(a: Relation, attrs: Sequence[str], keys) -> Relation:
    return Relation(a.schema, kernels.filter_in(a.rows, a.positions(attrs), keys))


def anti_semi_join(a: Relation, attrs: Sequence[str], keys) -> Relation:
    return Relation(a.schema, kernels.filter_out(a.rows, a.positions(attrs), keys))


def key_set(a: Relation, attrs: Sequence[str]) -> set:
    return kernels.key_set(a.rows, a.positions(attrs))


def project_aggregate(
    a: Relation, drop: Iterable[str], sr: Semiring, stats: RunStats | None = None
) -> Relation:
    gone = set(drop)
    if not gone & set(a.schema):
        return a
    keep = tuple(x for x in a.schema if x not in gone)
    rows, merges = kernels.aggregate(a.rows, a.positions(keep), sr.plus)
    if stats is not None:
        stats.record(len(rows), merges)
    return Relation(keep, rows)


def keep_only(a: Relation, keep: Iterable[str], sr: Semiring, stats: RunStats | None = None) -> Relation:
    kept = set(keep)
    return project_aggregate(a, [x for x in a.schema if x not in kept], sr, stats)


def project_one(
    a: Relation, attrs: Sequence[str], sr: Semiring, stats: RunStats | None = None
) -> Relation:
    rows = kernels.project_one(a.rows, a.positions(attrs), sr.one)
    if stats is not None:
        stats.record(len(rows))
    return Relation(tuple(attrs), rows)


def group_count(a: Relation, attrs: Sequence[str]) -> dict:
    return kernels.group_count(a.rows, a.positions(attrs))


def merge_results(
    parts: Sequence[Relation], sr: Semiring, stats: RunStats | None = None, schema: Sequence[str] | None = None
) -> Relation:
    if not parts:
        return Relation(tuple(schema or ()))
    target = tuple(schema) if schema is not None else parts[0].schema
    out: dict = {}
    merges = 0
    for part in parts:
        if sorted(part.schema) != sorted(target):
            raise SchemaError(f"cannot merge {part.schema} into {target}")
        for row, w in part.reorder(target).rows.items():
            if row in out:
                out[row] = sr.plus(out[row], w)
                merges += 1
            else:
                out[row] = w
    if stats is not None:
        stats.record(0, merges)
    return Relation(target, out)


def _ordered(attrs: Iterable[str], q: Query) -> tuple[str, ...]:
    rank = {a: i for i, a in enumerate(q.attrs)}
    return tuple(sorted(attrs, key=lambda a: (rank.get(a, len(rank)), a)))


def derived_relations(
    q: Query,
    tree: JoinTree,
    inst: Mapping[str, Relation],
    sr: Semiring,
    stats: RunStats | None = None,
) -> dict[int, Relation]:
    """Relation for every tree node.

    A node whose bag is a relation's attribute set starts from that relation;
    other bags start from the projection of a covering relation with
    annotation one, filtered by every relation touching the bag.  Relations
    strictly inside a bag are then joined in, so each input annotation enters
    exactly once.
    """
    hosts = assign_edges(q, tree)
    out: dict[int, Relation] = {}
    for node in tree.nodes:
        hosted = [q.edges[i] for i in hosts[node.id]]
        exact = next((e for e in hosted if e.attrs == node.bag), None)
        if exact is not None:
            rel = inst[exact.name]
            rest = [e for e in hosted if e is not exact]
        else:
            rel = _projection_bag(q, node.bag, inst, sr, stats)
            rest = hosted
        for e in rest:
            rel = join(rel, inst[e.name], sr, stats)
        out[node.id] = rel
    return out


def _projection_bag(
    q: Query, bag: frozenset[str], inst: Mapping[str, Relation], sr: Semiring, stats: RunStats | None
) -> Relation:
    cover = next((e for e in q.edges if bag <= e.attrs), None)
    if cover is None:
        raise QueryError(f"bag {sorted(bag)} is not inside any relation")
    schema = _ordered(bag, q)
    rel = project_one(inst[cover.name], schema, sr, stats)
    for e in q.edges:
        if e is cover:
            continue
        other = inst[e.name]
        if not other.rows:
            return Relation(schema)
        shared = tuple(a for a in schema if a in e.attrs)
        if shared:
            rel = semi_join_keys(rel, shared, key_set(other, shared))
    return rel


def derived_relation(
    q: Query, tree: JoinTree, inst: Mapping[str, Relation], u: int, sr: Semiring
) -> Relation:
    return derived_relations(q, tree, inst, sr)[u]


def reduce_tree(
    tree: JoinTree, rels: dict[int, Relation], root: int = 0, nodes: Iterable[int] | None = None
) -> dict[int, Relation]:
    """Bottom-up then top-down semi-join passes; returns new node relations."""
    order, parent = tree.rooted(root, nodes)
    out = dict(rels)
    for u in order[:-1]:
        p = parent[u]
        out[p] = semi_join(out[p], out[u])
    for u in reversed(order[:-1]):
        out[u] = semi_join(out[u], out[parent[u]])
    return out


def _first(a: object, b: object) -> object:
    return a


_KEYS_ONLY = Semiring("keys-only", None, None, _first, _first)


def full_reducer(
    q: Query, tree: JoinTree, inst: Mapping[str, Relation], sr: Semiring | None = None
) -> dict[str, Relation]:
    """Drop every tuple that takes part in no full join result."""
    # only key sets matter here, so annotations are carried along untouched
    node_rels = derived_relations(q, tree, inst, sr or _KEYS_ONLY)
    reduced = reduce_tree(tree, node_rels)
    hosts = assign_edges(q, tree)
    out = dict(inst)
    for u, edge_ids in hosts.items():
        for i in edge_ids:
            name = q.edges[i].name
            out[name] = semi_join(inst[name], reduced[u])
    return out
