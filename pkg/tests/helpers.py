"""Shared fixtures: reference queries, separated fuzz inputs, and an auditing observer."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from joinagg.decomposition import JoinTree, require_acyclic, separated_join_tree, view_of
from joinagg.driver import cleanse, separate
from joinagg.generators import gen_random_acyclic
from joinagg.hybrid import Label, Observer, Task, task_query
from joinagg.oracle import brute_force, same_result
from joinagg.query import Query, exists_connected_components
from joinagg.relation import Relation, derived_relations, full_reducer, group_count, merge_results
from joinagg.semiring import BOOLEAN, COUNTING, MAX_PRODUCT, SUM_PRODUCT, Semiring

SEMIRING_DOMAINS = {
    "counting": (COUNTING, st.integers(min_value=0, max_value=10**6)),
    "boolean": (BOOLEAN, st.booleans()),
    "maxprod": (
        MAX_PRODUCT,
        st.builds(lambda n, d: Fraction(min(n, d), d), st.integers(0, 50), st.integers(1, 50)),
    ),
    "sumprod": (SUM_PRODUCT, st.builds(Fraction, st.integers(-50, 50), st.integers(1, 20))),
}


def check_semiring_axioms(name: str, examples: int) -> None:
    """Commutativity, associativity, distributivity, identities and annihilation
    on ``examples`` sampled triples; raises on the first counterexample."""
    sr, elems = SEMIRING_DOMAINS[name]
    zero, one, add, mul = sr.zero, sr.one, sr.plus, sr.times

    @settings(max_examples=examples, deadline=None, database=None)
    @given(st.tuples(elems, elems, elems))
    def check(t):
        a, b, c = t
        assert add(a, b) == add(b, a)
        assert mul(a, b) == mul(b, a)
        assert add(add(a, b), c) == add(a, add(b, c))
        assert mul(mul(a, b), c) == mul(a, mul(b, c))
        assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
        assert add(a, zero) == a
        assert mul(a, one) == a
        assert mul(a, zero) == zero

    check()


def joint_output_query() -> Query:
    return Query.build(
        [
            ("R1", ("A1", "B1")),
            ("R2", ("A2", "B2")),
            ("R3", ("A3", "B3")),
            ("R5", ("B1", "B2", "C1", "C2")),
            ("R6", ("B3", "C1", "C2")),
        ],
        ["A1", "A2", "A3", "C2"],
    )


def star(k: int) -> Query:
    return Query.build([(f"R{i}", (f"A{i}", "B")) for i in range(1, k + 1)], [f"A{i}" for i in range(1, k + 1)])


def line(k: int) -> Query:
    return Query.build(
        [(f"R{i}", (f"A{i}", f"A{i + 1}")) for i in range(1, k + 1)], ["A1", f"A{k + 1}"]
    )


def connected_cleansed_inputs(count: int, sr: Semiring = COUNTING, start: int = 0):
    """Yield (query, instance) pairs that are connected through non-output
    attributes and already cleansed, drawn from the random generator."""
    seed = start
    made = 0
    while made < count:
        q, inst = gen_random_acyclic(seed, sr)
        seed += 1
        for ids in exists_connected_components(q):
            sub = q.restrict(ids)
            cq, cinst = cleanse(sub, {e.name: inst[e.name] for e in sub.edges}, sr)
            if not cq.edges or len(exists_connected_components(cq)) != 1:
                continue
            yield seed - 1, cq, cinst
            made += 1
            if made >= count:
                return


@dataclass
class SeparatedCase:
    seed: int
    query: Query
    tree: JoinTree
    rels: dict[int, Relation]
    out: int


def separated_cases(count: int, sr: Semiring = COUNTING, min_leaves: int = 2):
    """Separated inputs with at least ``min_leaves`` output leaves, fully reduced."""
    made = 0
    for seed, cq, cinst in connected_cleansed_inputs(10**9, sr):
        sq, sinst, _ = separate(cq, cinst, sr)
        tree = separated_join_tree(sq)
        if len(tree.output_leaves) < min_leaves:
            continue
        sinst = full_reducer(sq, require_acyclic(sq), sinst, sr)
        rels = derived_relations(sq, tree, sinst, sr)
        if any(not r.rows for r in rels.values()):
            continue
        out = len(brute_force(sq, sinst, sr))
        yield SeparatedCase(seed, sq, tree, rels, out)
        made += 1
        if made >= count:
            return


def subtree_counts(tree: JoinTree, rels, output, sr, u1: int, u2: int):
    """Per cut-key combination counts and the distinct output count of u1's side."""
    view = view_of(tree, u1, u2)
    nodes = sorted(view.nodes)
    q, inst = task_query(tree, {u: rels[u] for u in nodes}, (frozenset(output) & view.attrs) | view.keep)
    result = brute_force(q, inst, sr)
    keys = sorted(view.keep)
    per_key = group_count(result, keys)
    outs = [a for a in result.schema if a in output]
    distinct = len(group_count(result, outs)) if outs else (1 if result.rows else 0)
    return per_key, distinct


@dataclass
class AuditObserver(Observer):
    """Re-checks every label and split against the reference evaluator."""

    output: frozenset
    sr: Semiring
    guess: int
    violations: list = field(default_factory=list)
    splits: int = 0
    finalized: int = 0
    labels_checked: int = 0

    def on_label(self, tree, task: Task, edge, label, rule):
        self.labels_checked += 1
        width = len(tree.output_leaves)
        leaves = len(view_of(tree, *edge).leaf_set)
        bar = self.guess**leaves
        per_key, distinct = subtree_counts(tree, task.rels, self.output, self.sr, *edge)
        counts = list(per_key.values())
        small = all(c**width <= bar for c in counts)
        if label is Label.SMALL:
            ok = small
        elif label is Label.LARGE:
            ok = all(c**width > bar for c in counts)
        else:
            ok = small and distinct**width <= bar
        if not ok:
            self.violations.append((task.id, edge, label, rule, counts, distinct, bar))

    def on_split(self, tree, parent, heavy, light, edge):
        self.splits += 1
        whole = self._oracle(tree, parent)
        parts = merge_results([self._oracle(tree, heavy), self._oracle(tree, light)], self.sr, schema=whole.schema)
        if not same_result(whole, parts):
            self.violations.append((parent.id, edge, "partition"))

    def on_finalize(self, tree, task, root, result):
        self.finalized += 1

    def _oracle(self, tree, task):
        q, inst = task_query(tree, task.rels, self.output)
        return brute_force(q, inst, self.sr)
