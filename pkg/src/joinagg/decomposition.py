"""Width-1 tree decompositions: GYO join trees, separated trees, subtree views."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .query import CyclicQueryError, Query, QueryError, is_separated


@dataclass(frozen=True)
class TreeNode:
    id: int
    bag: frozenset[str]
    source: str | None = None  # name of the relation whose attributes equal the bag


@dataclass(frozen=True)
class JoinTree:
    nodes: tuple[TreeNode, ...]
    links: frozenset[tuple[int, int]]  # undirected, stored as (low, high)
    output_leaves: frozenset[int] = frozenset()
    width: int | None = None  # number of output-carrying leaves, for phi
    _adj: dict[int, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adj: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for a, b in self.links:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {k: tuple(sorted(v)) for k, v in adj.items()})

    def bag(self, u: int) -> frozenset[str]:
        return self.nodes[u].bag

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self._adj[u]

    def directed_edges(self) -> list[tuple[int, int]]:
        out = []
        for a, b in sorted(self.links):
            out += [(a, b), (b, a)]
        return sorted(out)

    def has_link(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.links

    def side(self, u1: int, u2: int) -> frozenset[int]:
        """Nodes reachable from u1 once the link {u1,u2} is cut."""
        if not self.has_link(u1, u2):
            raise QueryError(f"u{u1}-u{u2} is not a tree edge")
        seen = {u1}
        stack = [u1]
        while stack:
            x = stack.pop()
            for y in self._adj[x]:
                if y not in seen and not (x == u1 and y == u2):
                    seen.add(y)
                    stack.append(y)
        return frozenset(seen)

    def rooted(
        self, root: int, nodes: Iterable[int] | None = None
    ) -> tuple[list[int], dict[int, int]]:
        """Post-order over ``nodes`` (default all) and the parent map, root last."""
        allowed = set(self._adj) if nodes is None else set(nodes)
        parent: dict[int, int] = {}
        order: list[int] = []

        def visit(u: int, p: int | None) -> None:
            # iterative would be faster; trees here have a handful of nodes
            for v in self._adj[u]:
                if v != p and v in allowed:
                    parent[v] = u
                    visit(v, u)
            order.append(u)

        visit(root, None)
        return order, parent


@dataclass(frozen=True)
class CyclicReport:
    residue: tuple[str, ...]

    def __str__(self) -> str:
        return "cyclic; irreducible relations: " + ", ".join(self.residue)


@dataclass(frozen=True)
class SubtreeView:
    tree: JoinTree
    cut: tuple[int, int] | None
    nodes: frozenset[int]
    leaf_set: frozenset[int]
    phi: Fraction

    @property
    def keep(self) -> frozenset[str]:
        """Join attributes across the cut edge."""
        if self.cut is None:
            return frozenset()
        u1, u2 = self.cut
        return self.tree.bag(u1) & self.tree.bag(u2)

    @property
    def attrs(self) -> frozenset[str]:
        return frozenset().union(*(self.tree.bag(u) for u in self.nodes))


def _ear_tree(bags: Sequence[frozenset[str]]) -> list[tuple[int, int]] | list[int]:
    """Attach ears (lowest index first) to a witness bag.

    Returns the link list, or the indices left over if the reduction stalls.
    """
    remaining = list(range(len(bags)))
    links: list[tuple[int, int]] = []
    while len(remaining) > 1:
        for i in remaining:
            others = [j for j in remaining if j != i]
            shared = bags[i] & frozenset().union(*(bags[j] for j in others))
            witness = next((j for j in others if shared <= bags[j]), None)
            if witness is not None:
                links.append((min(i, witness), max(i, witness)))
                remaining.remove(i)
                break
        else:
            return remaining  # type: ignore[return-value]
    return links


def _maximal_sets(items: Sequence[frozenset[str]]) -> list[int]:
    """Indices of the first occurrence of every containment-maximal set."""
    keep = []
    for i, s in enumerate(items):
        dominated = any(
            (s < t) or (s == t and j < i) for j, t in enumerate(items) if j != i
        )
        if not dominated:
            keep.append(i)
    return keep


def gyo_join_tree(q: Query) -> JoinTree | CyclicReport:
    if not q.edges:
        raise QueryError("query has no relations")
    attrsets = [e.attrs for e in q.edges]
    chosen = _maximal_sets(attrsets)
    bags = [attrsets[i] for i in chosen]
    result = _ear_tree(bags)
    if result and isinstance(result[0], int):
        return CyclicReport(tuple(q.edges[chosen[i]].name for i in result))  # type: ignore[index]
    nodes = tuple(
        TreeNode(k, bags[k], q.edges[i].name) for k, i in enumerate(chosen)
    )
    return JoinTree(nodes, frozenset(result))  # type: ignore[arg-type]


def require_acyclic(q: Query) -> JoinTree:
    tree = gyo_join_tree(q)
    if isinstance(tree, CyclicReport):
        raise CyclicQueryError(str(tree), tree.residue)
    return tree


def is_acyclic(q: Query) -> bool:
    return not isinstance(gyo_join_tree(q), CyclicReport)


def separated_join_tree(q: Query) -> JoinTree:
    """Tree whose leaves are exactly the output-carrying relations.

    Internal bags are the maximal sets among the non-output cores ``e - y`` of
    output relations and the output-free relations; every output relation
    hangs off the first internal bag that hosts its core.
    """
    if not is_separated(q):
        raise QueryError("query is not separated")
    require_acyclic(q)
    if len(q.edges) == 1:
        e = q.edges[0]
        leaves = frozenset([0]) if e.attrs & q.output else frozenset()
        return JoinTree((TreeNode(0, e.attrs, e.name),), frozenset(), leaves, 1)

    carrying = [e for e in q.edges if e.attrs & q.output]
    plain = [e for e in q.edges if not e.attrs & q.output]
    candidates: list[frozenset[str]] = []
    origin: list[int] = []
    for i, e in enumerate(q.edges):
        candidates.append(e.attrs - q.output if e in carrying else e.attrs)
        origin.append(i)
    chosen = sorted(_maximal_sets(candidates), key=lambda i: origin[i])
    inner = [candidates[i] for i in chosen]
    links = _ear_tree(inner)
    if links and isinstance(links[0], int):
        raise CyclicQueryError("separated core is cyclic")

    offset = len(carrying)
    nodes = [TreeNode(k, e.attrs, e.name) for k, e in enumerate(carrying)]
    for k, bag in enumerate(inner):
        source = next((e.name for e in plain if e.attrs == bag), None)
        nodes.append(TreeNode(offset + k, bag, source))
    all_links = {(a + offset, b + offset) for a, b in links}  # type: ignore[misc]
    for k, e in enumerate(carrying):
        core = e.attrs - q.output
        host = next(j for j, bag in enumerate(inner) if core <= bag)
        all_links.add((k, offset + host))
    tree = JoinTree(
        tuple(nodes), frozenset(all_links), frozenset(range(offset)), len(carrying)
    )
    if len(carrying) >= 2:
        degree_one = {u for u in range(len(nodes)) if len(tree.neighbors(u)) == 1}
        if degree_one != set(range(offset)):
            raise QueryError("separated tree has an internal leaf; cleanse the query first")
    return tree


def split(tree: JoinTree, u1: int, u2: int) -> tuple[SubtreeView, SubtreeView]:
    first = tree.side(u1, u2)
    second = frozenset(n.id for n in tree.nodes) - first
    return _view(tree, (u1, u2), first), _view(tree, (u2, u1), second)


def view_of(tree: JoinTree, u1: int, u2: int) -> SubtreeView:
    return _view(tree, (u1, u2), tree.side(u1, u2))


def whole_view(tree: JoinTree) -> SubtreeView:
    return _view(tree, None, frozenset(n.id for n in tree.nodes))


def _view(tree: JoinTree, cut: tuple[int, int] | None, nodes: frozenset[int]) -> SubtreeView:
    leaves = nodes & tree.output_leaves
    width = tree.width or max(1, len(tree.output_leaves))
    return SubtreeView(tree, cut, nodes, leaves, Fraction(len(leaves), width))


def node_name(tree: JoinTree, u: int) -> str:
    return tree.nodes[u].source or f"u{u}"


def subquery_of_subtree(tree: JoinTree, view: SubtreeView, q: Query) -> Query:
    order = sorted(view.nodes)
    relations = [
        (node_name(tree, u), sorted(tree.bag(u), key=_attr_rank(q))) for u in order
    ]
    output = (q.output & view.attrs) | view.keep
    attrs = [a for a in q.attrs if a in view.attrs]
    return Query.build(relations, output, attrs)


def _attr_rank(q: Query):
    rank = {a: i for i, a in enumerate(q.attrs)}
    return lambda a: rank.get(a, len(rank))


def assign_edges(q: Query, tree: JoinTree) -> dict[int, list[int]]:
    """Host node for every relation: an exact bag match if any, else a covering bag."""
    hosts: dict[int, list[int]] = {n.id: [] for n in tree.nodes}
    for i, e in enumerate(q.edges):
        exact = [n.id for n in tree.nodes if n.bag == e.attrs]
        cover = exact or [n.id for n in tree.nodes if e.attrs <= n.bag]
        if not cover:
            raise QueryError(f"relation {e.name} is not covered by any bag")
        hosts[cover[0]].append(i)
    return hosts


def validate(tree: JoinTree, q: Query) -> list[str]:
    """Structural problems with ``tree`` as a width-1 decomposition of ``q``."""
    problems = []
    ids = [n.id for n in tree.nodes]
    if ids != list(range(len(ids))):
        problems.append("node ids are not dense")
    if len(tree.links) != len(ids) - 1:
        problems.append("link count is not nodes-1")
    if ids:
        order, _ = tree.rooted(0)
        if len(order) != len(ids):
            problems.append("tree is disconnected")
    bags = [n.bag for n in tree.nodes]
    if len(set(bags)) != len(bags):
        problems.append("bags are not pairwise distinct")
    for e in q.edges:
        if not any(e.attrs <= b for b in bags):
            problems.append(f"relation {e.name} not covered")
    for n in tree.nodes:
        if not any(n.bag <= e.attrs for e in q.edges):
            problems.append(f"bag of u{n.id} is not inside a relation")
    for a in q.attrs:
        holders = [n.id for n in tree.nodes if a in n.bag]
        if holders:
            order, _ = tree.rooted(holders[0], holders)
            if len(order) != len(holders):
                problems.append(f"attribute {a} breaks running intersection")
    return problems


def render(tree: JoinTree, root: int = 0, labels: dict[tuple[int, int], str] | None = None) -> str:
    """Indented text view; each child line shows the label of the edge toward its parent."""
    lines: list[str] = []

    def show(u: int, p: int | None, depth: int) -> None:
        bag = ",".join(sorted(tree.bag(u)))
        tag = f" [{tree.nodes[u].source}]" if tree.nodes[u].source else ""
        mark = ""
        if p is not None and labels is not None:
            up, down = labels.get((u, p)), labels.get((p, u))
            mark = f"  up={up or '-'} down={down or '-'}"
        lines.append(f"{'  ' * depth}u{u} {{{bag}}}{tag}{mark}")
        for v in tree.neighbors(u):
            if v != p:
                show(v, u, depth + 1)

    if tree.nodes:
        show(root, None, 0)
    return "\n".join(lines)
