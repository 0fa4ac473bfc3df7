"""Reference evaluator: enumerate the full join, then aggregate."""

from __future__ import annotations

from itertools import combinations
from math import prod
from typing import Mapping

from .query import Query
from .relation import Relation, check_instance
from .semiring import Semiring

ENUMERATION_LIMIT = 10**7


class TooLargeError(ValueError):
    """The full join is too big to enumerate."""


def cover_bound(q: Query, inst: Mapping[str, Relation]) -> int:
    """Smallest product of relation sizes over sets of relations covering every attribute."""
    sizes = [len(inst[e.name]) for e in q.edges]
    everything = frozenset(q.attrs)
    best = prod(sizes)
    if len(q.edges) > 16:
        return best
    for size in range(1, len(q.edges) + 1):
        for combo in combinations(range(len(q.edges)), size):
            if frozenset().union(*(q.edges[i].attrs for i in combo)) >= everything:
                best = min(best, prod(sizes[i] for i in combo))
    return best


def brute_force(
    q: Query, inst: Mapping[str, Relation], sr: Semiring, limit: int = ENUMERATION_LIMIT
) -> Relation:
    check_instance(q, inst)
    bound = cover_bound(q, inst)
    if bound > limit:
        raise TooLargeError(f"full join may reach {bound} rows (limit {limit})")
    order = q.output_order
    if any(not inst[e.name].rows for e in q.edges):
        return Relation(order)

    # index every relation on the attributes bound by the relations before it
    plans = []
    bound_attrs: list[str] = []
    for e in q.edges:
        rel = inst[e.name]
        key_attrs = [a for a in rel.schema if a in bound_attrs]
        key_pos = rel.positions(key_attrs)
        new_attrs = [a for a in rel.schema if a not in bound_attrs]
        new_pos = rel.positions(new_attrs)
        index: dict[tuple, list] = {}
        for row, w in rel.rows.items():
            index.setdefault(tuple(row[p] for p in key_pos), []).append(
                (tuple(row[p] for p in new_pos), w)
            )
        plans.append((key_attrs, new_attrs, index))
        bound_attrs.extend(new_attrs)

    out: dict[tuple, object] = {}
    binding: dict[str, object] = {}

    def walk(depth: int, weight: object) -> None:
        if depth == len(plans):
            key = tuple(binding[a] for a in order)
            out[key] = sr.plus(out[key], weight) if key in out else weight
            return
        key_attrs, new_attrs, index = plans[depth]
        for values, w in index.get(tuple(binding[a] for a in key_attrs), ()):
            for a, v in zip(new_attrs, values):
                binding[a] = v
            walk(depth + 1, sr.times(weight, w))

    walk(0, sr.one)
    return Relation(order, out)


def same_result(a: Relation, b: Relation) -> bool:
    """Equal schemas (up to column order), key sets and annotations."""
    if sorted(a.schema) != sorted(b.schema):
        return False
    return a.rows == b.reorder(a.schema).rows
