import operator
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import line
from joinagg import _kernels_py, kernels
from joinagg.decomposition import require_acyclic
from joinagg.generators import gen_random_acyclic
from joinagg.oracle import brute_force, same_result
from joinagg.query import Query
from joinagg.relation import (
    BudgetExceeded,
    Relation,
    RunStats,
    SchemaError,
    anti_semi_join,
    check_instance,
    derived_relation,
    full_reducer,
    join,
    key_set,
    merge_results,
    project_aggregate,
    semi_join,
    semi_join_keys,
    value_key,
)
from joinagg.semiring import BOOLEAN, COUNTING, MAX_PRODUCT, SUM_PRODUCT

try:
    from joinagg import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

BACKENDS = [pytest.param(_kernels_py, id="python")] + (
    [pytest.param(_ckernels, id="cython")] if _ckernels else []
)


def rel(schema, rows):
    return Relation(schema, dict(rows))


class TestKernels:
    @pytest.mark.parametrize("impl", BACKENDS)
    @pytest.mark.parametrize("build_left", [True, False])
    def test_hash_join(self, impl, build_left):
        left = {(1, 2): 2, (1, 3): 1, (4, 2): 5}
        right = {(2, "x"): 3, (2, "y"): 1, (9, "z"): 1}
        out = impl.hash_join(left, right, (1,), (0,), (1,), operator.mul, 100, build_left)
        assert out == {(1, 2, "x"): 6, (1, 2, "y"): 2, (4, 2, "x"): 15, (4, 2, "y"): 5}

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_hash_join_stops_at_limit(self, impl):
        left = {(i, 0): 1 for i in range(10)}
        right = {(0, j): 1 for j in range(10)}
        assert impl.hash_join(left, right, (1,), (0,), (1,), operator.mul, 99, False) is None
        assert len(impl.hash_join(left, right, (1,), (0,), (1,), operator.mul, 100, False)) == 100

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_cartesian(self, impl):
        out = impl.hash_join({(1,): 2}, {(7,): 3, (8,): 1}, (), (), (0,), operator.mul, 10, True)
        assert out == {(1, 7): 6, (1, 8): 2}

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_filters_and_keys(self, impl):
        rows = {(1, "a"): 1, (2, "b"): 1, (3, "c"): 1}
        keys = {(2,), (3,), (4,)}
        assert impl.key_set(rows, (0,)) == {(1,), (2,), (3,)}
        assert impl.filter_in(rows, (0,), keys) == {(2, "b"): 1, (3, "c"): 1}
        assert impl.filter_out(rows, (0,), keys) == {(1, "a"): 1}

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_grouping(self, impl):
        rows = {(1, 2): 1, (1, 3): 4, (2, 3): 1}
        assert impl.aggregate(rows, (0,), operator.add) == ({(1,): 5, (2,): 1}, 1)
        assert impl.project_one(rows, (1,), True) == {(2,): True, (3,): True}
        assert impl.group_count(rows, (0,)) == {(1,): 2, (2,): 1}

    @pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
    @settings(max_examples=200, deadline=None)
    @given(
        st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4)), st.integers(1, 5), max_size=25),
        st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4)), st.integers(1, 5), max_size=25),
    )
    def test_backends_agree(self, left, right):
        for args in (((1,), (0,), (1,)), ((0, 1), (1, 0), ())):
            a = _kernels_py.hash_join(left, right, *args, operator.mul, 10**6, True)
            b = _ckernels.hash_join(left, right, *args, operator.mul, 10**6, False)
            assert a == b
        assert _kernels_py.aggregate(left, (1,), operator.add) == _ckernels.aggregate(left, (1,), operator.add)
        assert _kernels_py.group_count(left, (1,)) == _ckernels.group_count(left, (1,))

    def test_backend_is_reported(self):
        assert kernels.BACKEND in ("cython", "python")


class TestOperators:
    def test_join_multiplies(self):
        out = join(rel(("A", "B"), {(1, 2): 2}), rel(("B", "C"), {(2, 3): 3}), COUNTING)
        assert out.schema == ("A", "B", "C") and out.rows == {(1, 2, 3): 6}

    def test_join_disjoint_schemas_is_a_product(self):
        out = join(rel(("A",), {(1,): 1, (2,): 1}), rel(("B",), {(5,): 1}), COUNTING)
        assert len(out) == 2

    def test_join_value_disjoint_is_empty(self):
        a = rel(("A", "B"), {(i, i): 1 for i in range(3)})
        b = rel(("B", "C"), {(i + 10, i): 1 for i in range(3)})
        assert not join(a, b, COUNTING).rows

    def test_join_respects_budget(self):
        stats = RunStats(budget=3)
        a = rel(("A", "B"), {(i, 0): 1 for i in range(2)})
        b = rel(("B", "C"), {(0, j): 1 for j in range(2)})
        with pytest.raises(BudgetExceeded):
            join(a, b, COUNTING, stats)

    def test_semi_join(self):
        a = rel(("K", "V"), {(1, "a"): 1, (2, "b"): 1, (3, "c"): 1})
        b = rel(("K",), {(2,): 1, (3,): 1, (4,): 1})
        assert set(semi_join(a, b).rows) == {(2, "b"), (3, "c")}
        assert not semi_join(a, rel(("K",), {})).rows
        assert semi_join(a, rel(("Z",), {(0,): 1})).rows == a.rows

    def test_semi_and_anti_partition(self):
        a = rel(("K", "V"), {(1, "a"): 1, (2, "b"): 2, (3, "c"): 3})
        keys = {(2,), (5,)}
        inside = semi_join_keys(a, ["K"], keys)
        outside = anti_semi_join(a, ["K"], keys)
        assert {**inside.rows, **outside.rows} == a.rows
        assert not set(inside.rows) & set(outside.rows)
        assert anti_semi_join(a, ["K"], set()).rows == a.rows
        assert not anti_semi_join(a, ["K"], key_set(a, ["K"])).rows

    def test_project_aggregate(self):
        r = rel(("A", "B"), {(1, 2): 1, (1, 3): 1})
        assert project_aggregate(r, ["B"], COUNTING).rows == {(1,): 2}
        assert project_aggregate(r, [], COUNTING) is r
        t = rel(("A", "B"), {(1, 2): Fraction(1, 2), (1, 3): Fraction(9, 10)})
        assert project_aggregate(t, ["B"], MAX_PRODUCT).rows == {(1,): Fraction(9, 10)}

    @settings(max_examples=100, deadline=None)
    @given(st.dictionaries(st.tuples(*[st.integers(0, 3)] * 3), st.integers(1, 4), max_size=30))
    def test_nested_projection(self, rows):
        r = Relation(("A", "B", "C"), rows)
        once = project_aggregate(r, ["B", "C"], COUNTING)
        twice = project_aggregate(project_aggregate(r, ["C"], COUNTING), ["B"], COUNTING)
        assert once.rows == twice.rows

    def test_merge_results(self):
        a = rel(("A",), {(1,): 3})
        b = rel(("A",), {(1,): 3, (2,): 1})
        assert merge_results([a, b], COUNTING).rows == {(1,): 6, (2,): 1}
        assert merge_results([rel(("A",), {(1,): 1}), rel(("A",), {(2,): 1})], COUNTING).rows == {(1,): 1, (2,): 1}
        assert merge_results([], COUNTING, schema=("A",)).schema == ("A",)
        with pytest.raises(SchemaError):
            merge_results([a, rel(("B",), {})], COUNTING)

    def test_from_pairs_merges_duplicates(self):
        r = Relation.from_pairs(("A",), [((1,), 2), ((1,), 3)], COUNTING)
        assert r.rows == {(1,): 5}

    def test_reorder_and_rename(self):
        r = rel(("A", "B"), {(1, 2): 1})
        assert r.reorder(("B", "A")).rows == {(2, 1): 1}
        assert r.rename({"A": "Z"}).schema == ("Z", "B")
        with pytest.raises(SchemaError):
            r.reorder(("A", "C"))

    def test_value_order_puts_ints_first(self):
        assert sorted(["b", 10, "a", 2], key=value_key) == [2, 10, "a", "b"]


class TestInstance:
    def test_schema_mismatch(self):
        q = line(2)
        with pytest.raises(SchemaError):
            check_instance(q, {"R1": rel(("A1", "A2"), {}), "R2": rel(("A2", "X"), {})})
        with pytest.raises(SchemaError):
            check_instance(q, {"R1": rel(("A1", "A2"), {})})

    def test_derived_relation_for_source_bag(self):
        q = line(2)
        inst = {"R1": rel(("A1", "A2"), {(1, 2): 5}), "R2": rel(("A2", "A3"), {(2, 3): 1})}
        tree = require_acyclic(q)
        assert derived_relation(q, tree, inst, 0, COUNTING).rows == {(1, 2): 5}

    def test_derived_relation_for_inner_bag(self):
        from joinagg.decomposition import JoinTree, TreeNode

        q = Query.build([("R", ("A", "B")), ("S", ("B", "C"))], [])
        tree = JoinTree((TreeNode(0, frozenset("AB"), "R"), TreeNode(1, frozenset("B"), None), TreeNode(2, frozenset("BC"), "S")), frozenset({(0, 1), (1, 2)}))
        inst = {"R": rel(("A", "B"), {(1, 2): 4, (1, 3): 4}), "S": rel(("B", "C"), {(2, 0): 7, (5, 0): 7})}
        # the B bag is the intersection of both projections with annotation one
        assert derived_relation(q, tree, inst, 1, COUNTING).rows == {(2,): 1}

    def test_full_reducer_drops_dangling_rows(self):
        q = line(3)
        inst = {
            "R1": rel(("A1", "A2"), {(1, 1): 1, (2, 9): 1}),
            "R2": rel(("A2", "A3"), {(1, 1): 1}),
            "R3": rel(("A3", "A4"), {(1, 1): 1}),
        }
        reduced = full_reducer(q, require_acyclic(q), inst)
        assert set(reduced["R1"].rows) == {(1, 1)}
        again = full_reducer(q, require_acyclic(q), reduced)
        assert all(again[n].rows == reduced[n].rows for n in inst)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([COUNTING, BOOLEAN, SUM_PRODUCT]))
    def test_full_reducer_preserves_results(self, seed, sr):
        q, inst = gen_random_acyclic(seed, sr)
        reduced = full_reducer(q, require_acyclic(q), inst, sr)
        assert same_result(brute_force(q, reduced, sr), brute_force(q, inst, sr))
        for e in q.edges:
            assert set(reduced[e.name].rows) <= set(inst[e.name].rows)
