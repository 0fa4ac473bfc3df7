"""Instance generators: worst-case star and line families plus random fuzz inputs.

Every generator is a pure function of its arguments and returns a
``(query, instance)`` pair.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable

from .decomposition import require_acyclic
from .query import Query
from .relation import Relation, RunStats
from .semiring import BOOLEAN, COUNTING, MAX_PRODUCT, SUM_PRODUCT, Semiring

FAMILIES = ("star_hard", "line_adversarial", "line_hard", "random_acyclic", "random_line")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    N: int
    OUT: int = 0
    k: int = 3
    seed: int = 0


Generated = tuple[Query, dict[str, Relation]]


def integer_root(n: int, k: int) -> int:
    """Largest r with r**k <= n."""
    if n < 1:
        return 0
    r = int(round(n ** (1 / k)))
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def random_annotation(sr: Semiring, rng: random.Random) -> object:
    if sr is COUNTING:
        return rng.randint(1, 3)
    if sr is BOOLEAN:
        return rng.random() < 0.9
    if sr is MAX_PRODUCT:
        return Fraction(rng.randint(1, 8), 8)
    if sr is SUM_PRODUCT:
        return Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    return sr.one


def _weights(sr: Semiring, seed: int, random_weights: bool) -> Callable[[], object]:
    if not random_weights:
        return lambda: sr.one
    rng = random.Random(seed ^ 0x5EED)
    return lambda: random_annotation(sr, rng)


def _product(schema: tuple[str, str], left, right, weight) -> Relation:
    return Relation(schema, {(a, b): weight() for a in left for b in right})


def gen_star_hard(
    k: int, N: int, OUT: int, seed: int = 0, sr: Semiring = COUNTING, random_weights: bool = False
) -> Generated:
    """Star query R_i(A_i, B) where every R_i is a full product of its A_i and B domains.

    Each A_i gets floor(OUT^(1/k)) values and B gets N / (k * |A_i|) values,
    so each relation holds N/k rows and the output has exactly |A_i|^k rows.
    """
    if k < 2:
        raise ValueError("a star needs at least two relations")
    width = integer_root(OUT, k)
    if width < 1:
        raise ValueError("OUT must be at least 1")
    hub = N // (k * width)
    if hub < 1:
        raise ValueError(f"N={N} is too small for {k} relations with {width} values each")
    weight = _weights(sr, seed, random_weights)
    hub_values = list(range(hub))
    relations = [(f"R{i}", (f"A{i}", "B")) for i in range(1, k + 1)]
    q = Query.build(relations, [f"A{i}" for i in range(1, k + 1)])
    inst = {
        name: _product(schema, range(width), hub_values, weight) for name, schema in relations
    }
    return q, inst


def line_query(k: int) -> Query:
    return Query.build(
        [(f"R{i}", (f"A{i}", f"A{i + 1}")) for i in range(1, k + 1)], ["A1", f"A{k + 1}"]
    )


def gen_line_hard(
    k: int, N: int, OUT: int, seed: int = 0, sr: Semiring = COUNTING, random_weights: bool = False
) -> Generated:
    """Line instance shaped like the two-relation star.

    R1 and Rk are full products of sqrt(OUT) end values with b middle values;
    the relations in between are perfect matchings on the middle values.
    Every plan has to touch about N * sqrt(OUT) / 2 joined rows.
    """
    if k < 2:
        raise ValueError("a line needs at least two relations")
    width = isqrt(OUT)
    if width < 1:
        raise ValueError("OUT must be at least 1")
    middle = N // (2 * width + k - 2)
    if middle < 1:
        raise ValueError(f"N={N} is too small for OUT={OUT}")
    weight = _weights(sr, seed, random_weights)
    q = line_query(k)
    inst = {}
    mids = list(range(middle))
    inst["R1"] = _product(("A1", "A2"), range(width), mids, weight)
    for i in range(2, k):
        inst[f"R{i}"] = Relation((f"A{i}", f"A{i + 1}"), {(v, v): weight() for v in mids})
    inst[f"R{k}"] = _product((f"A{k}", f"A{k + 1}"), mids, range(width), weight)
    return q, inst


def gen_line_adversarial(
    N: int,
    OUT: int,
    seed: int = 0,
    k: int = 3,
    sr: Semiring = COUNTING,
    random_weights: bool = False,
    verify: bool = True,
    blowup: float = 0.1,
) -> Generated:
    """Three-relation line where both end-rooted Yannakakis plans blow up.

    Two value-disjoint halves mirror each other:

    * first half:  one A1 value reaches n A2 values, all of which meet in one
      A3 value that fans out to OUT/2 A4 values.  Rooting at R1 forces the
      plan to build the (A2, A4) join of size n * OUT/2.
    * second half: OUT/2 A1 values meet in one A2 value that fans out to n A3
      values, all of which lead to a single A4 value.  Rooting at R3 builds
      the (A1, A3) join of size n * OUT/2.

    With N = 4n + OUT both roots materialize about N * OUT / 8 rows.  The
    generator insists on N >= 100 * sqrt(OUT) and, with ``verify``, measures
    both plans and raises if either stays below ``blowup * N * OUT``.
    """
    if k != 3:
        raise ValueError("only the three-relation layout is implemented")
    half = OUT // 2
    if half < 1:
        raise ValueError("OUT must be at least 2")
    if N * N < 10_000 * OUT:
        raise ValueError(f"need N >= 100*sqrt(OUT); got N={N}, OUT={OUT}")
    n = (N - 2 * half) // 4
    if n < 1:
        raise ValueError(f"N={N} is too small for OUT={OUT}")
    weight = _weights(sr, seed, random_weights)
    spread = list(range(n))
    fan = list(range(half))
    r1: dict = {}
    r2: dict = {}
    r3: dict = {}
    # first half: values tagged "p"
    for v in spread:
        r1[("p", ("p", v))] = weight()
        r2[(("p", v), "p")] = weight()
    for v in fan:
        r3[("p", ("p", v))] = weight()
    # second half: values tagged "q"
    for v in fan:
        r1[(("q", v), "q")] = weight()
    for v in spread:
        r2[("q", ("q", v))] = weight()
        r3[(("q", v), "q")] = weight()
    q = line_query(3)
    inst = {
        "R1": Relation(("A1", "A2"), _flatten(r1)),
        "R2": Relation(("A2", "A3"), _flatten(r2)),
        "R3": Relation(("A3", "A4"), _flatten(r3)),
    }
    if verify:
        need = blowup * N * OUT
        for root in classic_roots(q):
            rows = classic_peak(q, inst, sr, root)
            if rows < need:
                raise RuntimeError(
                    f"plan rooted at node {root} peaks at {rows} rows, below {need:.0f}"
                )
    return q, inst


def _flatten(rows: dict) -> dict:
    """Turn the tagged values into plain strings such as ``p17``."""

    def code(v: object) -> str:
        if isinstance(v, tuple):
            return f"{v[0]}{v[1]}"
        return f"{v}"

    return {tuple(code(v) for v in row): w for row, w in rows.items()}


def classic_roots(q: Query) -> tuple[int, int]:
    tree = require_acyclic(q)
    leaves = [n.id for n in tree.nodes if len(tree.neighbors(n.id)) <= 1]
    return leaves[0], leaves[-1]


def classic_peak(q: Query, inst: dict[str, Relation], sr: Semiring, root: int) -> int:
    from .yannakakis import yannakakis

    stats = RunStats()
    yannakakis(q, inst, sr, root=root, stats=stats)
    return stats.max_intermediate_rows


def gen_random_acyclic(
    seed: int,
    sr: Semiring = COUNTING,
    max_relations: int = 6,
    max_arity: int = 5,
    max_rows: int = 40,
    domain: int = 4,
    output_probability: float = 0.4,
) -> Generated:
    """Random query built from a random tree, with random rows.

    Each new relation shares a random non-empty subset of its parent's
    attributes (occasionally none) and adds fresh ones, so the attribute
    occurrences stay connected and the query is acyclic by construction.
    """
    rng = random.Random(seed)
    count = rng.randint(1, max_relations)
    attrs: list[str] = []

    def fresh() -> str:
        name = f"X{len(attrs)}"
        attrs.append(name)
        return name

    schemas: list[list[str]] = [[fresh() for _ in range(rng.randint(1, 3))]]
    for _ in range(1, count):
        parent = schemas[rng.randrange(len(schemas))]
        shared = [] if rng.random() < 0.08 else rng.sample(parent, rng.randint(1, len(parent)))
        room = max_arity - len(shared)
        extra = rng.randint(0 if shared else 1, min(2, room))
        schema = shared + [fresh() for _ in range(extra)]
        rng.shuffle(schema)
        schemas.append(schema)
    output = [a for a in attrs if rng.random() < output_probability]
    q = Query.build([(f"R{i}", tuple(s)) for i, s in enumerate(schemas)], output, attrs=attrs)

    sizes = {a: rng.randint(1, domain) for a in attrs}
    inst = {}
    for i, schema in enumerate(schemas):
        space = 1
        for a in schema:
            space *= sizes[a]
        want = rng.randint(0 if rng.random() < 0.03 else 1, min(max_rows, space))
        rows: dict = {}
        while len(rows) < want:
            row = tuple(rng.randrange(sizes[a]) for a in schema)
            if row not in rows:
                rows[row] = random_annotation(sr, rng)
        inst[f"R{i}"] = Relation(tuple(schema), rows)
    return q, inst


def gen_random_line(
    k: int, N: int, seed: int = 0, sr: Semiring = COUNTING, random_weights: bool = False, domain: int | None = None
) -> Generated:
    """Line query with N/k random rows per relation over a common domain size."""
    rng = random.Random(seed)
    per = max(1, N // k)
    size = domain or max(2, isqrt(per) * 2)
    weight = _weights(sr, seed, random_weights)
    q = line_query(k)
    inst = {}
    for i in range(1, k + 1):
        rows: dict = {}
        target = min(per, size * size)
        while len(rows) < target:
            rows[(rng.randrange(size), rng.randrange(size))] = None
        inst[f"R{i}"] = Relation((f"A{i}", f"A{i + 1}"), {r: weight() for r in rows})
    return q, inst


def generate(spec: GeneratorSpec, sr: Semiring = COUNTING) -> Generated:
    if spec.family == "star_hard":
        return gen_star_hard(spec.k, spec.N, spec.OUT, spec.seed, sr)
    if spec.family == "line_hard":
        return gen_line_hard(spec.k, spec.N, spec.OUT, spec.seed, sr)
    if spec.family == "line_adversarial":
        return gen_line_adversarial(spec.N, spec.OUT, spec.seed, spec.k, sr)
    if spec.family == "random_acyclic":
        return gen_random_acyclic(spec.seed, sr, max_relations=max(1, spec.k), max_rows=max(1, spec.N))
    if spec.family == "random_line":
        return gen_random_line(spec.k, spec.N, spec.seed, sr)
    raise ValueError(f"unknown generator family {spec.family!r} (known: {', '.join(FAMILIES)})")
