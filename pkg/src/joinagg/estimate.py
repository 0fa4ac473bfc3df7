"""Output-size estimation for line queries with k-minimum-values sketches.

Each A(k+1) value gets a keyed 40-bit hash.  Sketches flow right to left: a
value of A_i keeps the k smallest distinct hashes over everything it reaches.
For each A1 value the distinct count is estimated as (k-1)/v_k (or counted
exactly when fewer than k hashes survive); the per-value median over trials
is summed.
"""

from __future__ import annotations

import hashlib
from typing import Mapping

import numpy as np

from .query import Query
from .relation import Relation

_EMPTY = np.iinfo(np.uint64).max
_BITS = 40  # leaves 24 bits for the group id when sorting (group, hash) as one key
_MASK = (1 << _BITS) - 1


def _hashes(values: list, seed: int) -> np.ndarray:
    key = seed.to_bytes(8, "little", signed=False)
    out = np.empty(len(values), dtype=np.uint64)
    for i, v in enumerate(values):
        digest = hashlib.blake2b(repr(v).encode(), digest_size=8, key=key).digest()
        out[i] = int.from_bytes(digest, "little") & _MASK
    return out


def _merge_level(
    src: np.ndarray, dst: np.ndarray, sketches: np.ndarray, n_dst: int, k: int
) -> np.ndarray:
    """k smallest distinct hashes per destination value over its edges."""
    out = np.full((n_dst, k), _EMPTY, dtype=np.uint64)
    if len(src) == 0:
        return out
    gathered = sketches[src]  # (edges, k)
    groups = np.repeat(dst, k)
    values = gathered.reshape(-1)
    live = values != _EMPTY
    groups, values = groups[live], values[live]
    if len(values) == 0:
        return out
    if n_dst < 1 << (64 - _BITS):
        keys = np.sort((groups.astype(np.uint64) << np.uint64(_BITS)) | values)
        groups, values = (keys >> np.uint64(_BITS)).astype(np.int64), keys & np.uint64(_MASK)
    else:
        order = np.lexsort((values, groups))
        groups, values = groups[order], values[order]
    fresh = np.ones(len(values), dtype=bool)
    fresh[1:] = (groups[1:] != groups[:-1]) | (values[1:] != values[:-1])
    groups, values = groups[fresh], values[fresh]
    starts = np.searchsorted(groups, groups, side="left")
    rank = np.arange(len(groups)) - starts
    keep = rank < k
    out[groups[keep], rank[keep]] = values[keep]
    return out


def _per_start_estimates(sketches: np.ndarray, k: int) -> np.ndarray:
    counts = (sketches != _EMPTY).sum(axis=1)
    kth = sketches[:, k - 1].astype(np.float64)
    with np.errstate(divide="ignore"):
        approx = (k - 1) / ((kth + 1.0) / 2.0**_BITS)
    return np.where(counts < k, counts.astype(np.float64), approx)


def kmv_estimate_line(
    q: Query,
    inst: Mapping[str, Relation],
    k: int = 64,
    trials: int = 9,
    seed: int = 0,
) -> float:
    from .line import line_relations

    if k < 2:
        raise ValueError("sketch size must be at least 2")
    path, rels = line_relations(q, inst)
    domains: list[dict] = [dict() for _ in path]
    pairs = []
    for i, rel in enumerate(rels):
        left, right = domains[i], domains[i + 1]
        src, dst = [], []
        for a, b in rel.rows:
            dst.append(left.setdefault(a, len(left)))
            src.append(right.setdefault(b, len(right)))
        pairs.append((np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)))
    if not domains[0]:
        return 0.0
    last_values = list(domains[-1])
    per_trial = []
    for trial in range(trials):
        sketch = np.full((len(last_values), k), _EMPTY, dtype=np.uint64)
        sketch[:, 0] = _hashes(last_values, seed * 1_000_003 + trial)
        for i in range(len(rels) - 1, -1, -1):
            src, dst = pairs[i]
            sketch = _merge_level(src, dst, sketch, len(domains[i]), k)
        per_trial.append(_per_start_estimates(sketch, k))
    return float(np.median(np.vstack(per_trial), axis=0).sum())
