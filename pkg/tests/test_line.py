import pytest
from hypothesis import given, settings, strategies as st

from helpers import line
from joinagg.estimate import kmv_estimate_line
from joinagg.generators import classic_peak, classic_roots, gen_line_adversarial, gen_random_line
from joinagg.line import LineLevel, ceil_sqrt, classify_heavy, line_relations, run_line
from joinagg.oracle import brute_force, same_result
from joinagg.query import Query, QueryError
from joinagg.relation import Relation, RunStats
from joinagg.semiring import BOOLEAN, COUNTING, MAX_PRODUCT, SUM_PRODUCT
from joinagg.yannakakis import yannakakis


def toy():
    q = line(2)
    inst = {
        "R1": Relation(("A1", "A2"), {(1, "x"): 1, (2, "x"): 1, (3, "y"): 1}),
        "R2": Relation(("A2", "A3"), {("x", 7): 1, ("x", 8): 1, ("y", 7): 1}),
    }
    return q, inst


def test_ceil_sqrt():
    assert [ceil_sqrt(n) for n in (1, 2, 4, 5, 9, 10)] == [1, 2, 2, 3, 3, 4]


def test_two_relations():
    q, inst = toy()
    result, _ = run_line(q, inst, COUNTING, out_guess=4)
    assert result.rows == {(1, 7): 1, (1, 8): 1, (2, 7): 1, (2, 8): 1, (3, 7): 1}


def test_huge_guess_leaves_everything_light():
    q, inst = toy()
    levels: list[LineLevel] = []
    result, _ = run_line(q, inst, COUNTING, out_guess=10**6, levels=levels)
    assert all(not lv.heavy for lv in levels)
    assert same_result(result, yannakakis(q, inst, COUNTING)[0])


def test_guess_of_one_is_still_correct():
    q, inst = toy()
    levels: list[LineLevel] = []
    result, _ = run_line(q, inst, COUNTING, out_guess=1, levels=levels)
    assert levels[0].heavy == {"x"}
    assert same_result(result, brute_force(q, inst, COUNTING))


def test_heavy_boundary():
    t = Relation(("A1", "A2"), {(a, "h"): 1 for a in range(3)} | {(a, "l"): 1 for a in range(2)})
    heavy, light = classify_heavy(t, "A2", 2)
    assert heavy == {"h"} and light == {"l"}


def test_relations_are_oriented_along_the_path():
    q = Query.build([("S", ("A3", "A2")), ("R", ("A1", "A2"))], ["A1", "A3"])
    inst = {"S": Relation(("A3", "A2"), {(5, 1): 1}), "R": Relation(("A1", "A2"), {(0, 1): 1})}
    path, rels = line_relations(q, inst)
    assert path in (["A1", "A2", "A3"], ["A3", "A2", "A1"])
    assert [r.schema for r in rels] == [tuple(path[:2]), tuple(path[1:])]
    result = run_line(q, inst, COUNTING, 1)[0]
    assert result.schema == ("A3", "A1") and result.rows == {(5, 0): 1}


def test_rejects_non_line():
    q = Query.build([("R", ("A", "B")), ("S", ("B", "C"))], ["A"])
    with pytest.raises(QueryError):
        run_line(q, {"R": Relation(("A", "B")), "S": Relation(("B", "C"))}, COUNTING, 1)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(2, 5),
    st.integers(0, 10**6),
    st.sampled_from([COUNTING, BOOLEAN, MAX_PRODUCT, SUM_PRODUCT]),
    st.sampled_from([1, 3, 20, 10**4]),
)
def test_matches_oracle(k, seed, sr, guess):
    q, inst = gen_random_line(k, 12 * k, seed, sr, random_weights=True, domain=4)
    result, _ = run_line(q, inst, sr, guess)
    assert same_result(result, brute_force(q, inst, sr))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6), st.sampled_from([1, 4, 16, 100]))
def test_light_state_stays_bounded(k, seed, guess):
    q, inst = gen_random_line(k, 40 * k, seed, domain=6)
    n = sum(len(r) for r in inst.values())
    levels: list[LineLevel] = []
    run_line(q, inst, COUNTING, guess, levels=levels)
    for lv in levels:
        assert lv.t_rows <= n * ceil_sqrt(guess)


def test_adversarial_instance_beats_both_classic_roots():
    q, inst = gen_line_adversarial(3000, 100)
    stats = RunStats()
    run_line(q, inst, COUNTING, 100, stats)
    peaks = [classic_peak(q, inst, COUNTING, r) for r in classic_roots(q)]
    assert stats.max_intermediate_rows * 10 < min(peaks)


class TestKmv:
    def test_exact_when_sketch_exceeds_distinct_count(self):
        q, inst = toy()
        assert kmv_estimate_line(q, inst, k=64) == 5

    def test_empty(self):
        q = line(2)
        assert kmv_estimate_line(q, {"R1": Relation(("A1", "A2")), "R2": Relation(("A2", "A3"))}) == 0

    def test_sketch_size_validated(self):
        q, inst = toy()
        with pytest.raises(ValueError):
            kmv_estimate_line(q, inst, k=1)

    def test_deterministic_for_a_seed(self):
        q, inst = gen_random_line(3, 3000, seed=5)
        assert kmv_estimate_line(q, inst, k=8, seed=3) == kmv_estimate_line(q, inst, k=8, seed=3)

    @pytest.mark.parametrize("seed", range(5))
    def test_within_factor_two(self, seed):
        q, inst = gen_random_line(3, 3000, seed=seed)
        true = len(brute_force(q, inst, BOOLEAN))
        est = kmv_estimate_line(q, inst, seed=seed)
        assert true / 2 <= est <= true * 2
