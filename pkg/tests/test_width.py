import json

import pytest
from hypothesis import given, settings, strategies as st

from helpers import joint_output_query, line, star
from joinagg.generators import gen_random_acyclic
from joinagg.query import CyclicQueryError, Query, cleanse_structure, exists_connected_components
from joinagg.width import (
    analyze,
    fn_fhtw,
    freew,
    is_line_query,
    projw,
    rho_star_acyclic,
    rho_star_exhaustive,
)

MATRIX = Query.build([("R", ("A", "B")), ("S", ("B", "C"))], ["A", "C"])
TRIANGLE = Query.build([("R", ("A", "B")), ("S", ("B", "C")), ("T", ("C", "A"))], ["A"])


class TestRhoStar:
    def test_matrix(self):
        assert rho_star_acyclic(MATRIX, {"A", "C"}) == (2, [0, 1])

    @pytest.mark.parametrize("k", range(2, 7))
    def test_star(self, k):
        q = star(k)
        assert rho_star_acyclic(q, q.output)[0] == k

    def test_joint_output_query_cover(self):
        q = joint_output_query()
        assert rho_star_acyclic(q, q.output) == (4, [0, 1, 2, 4])

    def test_empty_target(self):
        assert rho_star_acyclic(MATRIX, set()) == (0, [])

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 10**6), st.integers(0, 2**20))
    def test_greedy_matches_exhaustive(self, seed, mask):
        q, _ = gen_random_acyclic(seed)
        target = {a for i, a in enumerate(q.attrs) if mask >> i & 1}
        size, cover = rho_star_acyclic(q, target)
        assert size == rho_star_exhaustive(q, target)
        covered = set().union(*(q.edges[i].attrs for i in cover)) if cover else set()
        assert target <= covered


class TestWidths:
    def test_joint_output_query(self):
        q = joint_output_query()
        assert (freew(q), fn_fhtw(q), projw(q)) == (3, 4, 5)

    @pytest.mark.parametrize("k", range(2, 7))
    def test_line(self, k):
        q = line(k)
        assert (freew(q), fn_fhtw(q), projw(q)) == (2, 2, k)

    @pytest.mark.parametrize("k", range(2, 7))
    def test_star(self, k):
        q = star(k)
        assert (freew(q), fn_fhtw(q), projw(q)) == (k, k, k)

    def test_free_connex(self):
        q = Query.build([("R", ("A", "B")), ("S", ("B", "C"))], ["A", "B"])
        assert fn_fhtw(q) == 1

    def test_single_relation(self):
        q = Query.build([("R", ("A", "B"))], ["A"])
        assert (freew(q), fn_fhtw(q), projw(q)) == (1, 1, 1)

    def test_components_take_the_max(self):
        q = Query.build(
            [("R", ("A", "B")), ("S", ("B", "C")), ("T", ("C", "D")), ("U", ("D", "E"))],
            ["A", "C", "E"],
        )
        assert len(exists_connected_components(q)) == 2
        assert fn_fhtw(q) == 2

    def test_cyclic_rejected(self):
        with pytest.raises(CyclicQueryError):
            fn_fhtw(TRIANGLE)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 10**6))
    def test_ordering_and_cleanse_invariance(self, seed):
        q, _ = gen_random_acyclic(seed)
        assert freew(q) <= fn_fhtw(q) <= projw(q)
        parts = [q.restrict(ids) for ids in exists_connected_components(q)]
        assert fn_fhtw(q) == max(fn_fhtw(p) for p in parts)
        for p in parts:
            assert fn_fhtw(cleanse_structure(p)[0]) == fn_fhtw(p)


class TestLineDetection:
    def test_path_order(self):
        assert is_line_query(line(3)) == ["A1", "A2", "A3", "A4"]

    def test_shuffled_relations(self):
        q = Query.build([("S", ("C", "B")), ("R", ("A", "B")), ("T", ("C", "D"))], ["A", "D"])
        assert is_line_query(q) == ["A", "B", "C", "D"]

    def test_star_is_not_a_line(self):
        assert is_line_query(star(3)) is None

    def test_wrong_outputs(self):
        assert is_line_query(Query.build([("R", ("A", "B")), ("S", ("B", "C"))], ["A"])) is None


class TestAnalyze:
    def test_joint_output_query_report(self):
        report = analyze(joint_output_query())
        assert (report.freew, report.fn_fhtw, report.projw) == (3, 4, 5)
        assert report.acyclic and not report.free_connex and not report.a_hierarchical
        assert report.covering_edges == ["R1", "R2", "R3", "R6"]
        assert str(report.exponent) == "3/4"

    def test_star_report(self):
        report = analyze(star(3))
        assert (report.freew, report.fn_fhtw, report.projw) == (3, 3, 3)
        assert report.a_hierarchical

    def test_triangle_report(self):
        report = analyze(TRIANGLE)
        assert not report.acyclic and report.fn_fhtw is None
        assert json.loads(report.to_json())["acyclic"] is False
