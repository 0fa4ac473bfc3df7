"""Pure-Python hash kernels over ``{tuple: annotation}`` row maps.

``_ckernels.pyx`` mirrors every function here with the same signature.
"""

from __future__ import annotations

from operator import itemgetter


def _getter(idx):
    if not idx:
        return lambda row: ()
    if len(idx) == 1:
        i = idx[0]
        return lambda row: (row[i],)
    return itemgetter(*idx)


def hash_join(left, right, lidx, ridx, rrest, times, limit, build_left):
    """Natural join; output tuples are ``left_row + right_row[rrest]``.

    Returns None as soon as more than ``limit`` rows would be produced.
    """
    lkey, rkey, rtail = _getter(lidx), _getter(ridx), _getter(rrest)
    out = {}
    produced = 0
    if build_left:
        index = {}
        for row, w in left.items():
            index.setdefault(lkey(row), []).append((row, w))
        for row, v in right.items():
            hits = index.get(rkey(row))
            if hits is None:
                continue
            produced += len(hits)
            if produced > limit:
                return None
            tail = rtail(row)
            for lrow, w in hits:
                out[lrow + tail] = times(w, v)
    else:
        index = {}
        for row, v in right.items():
            index.setdefault(rkey(row), []).append((rtail(row), v))
        for row, w in left.items():
            hits = index.get(lkey(row))
            if hits is None:
                continue
            produced += len(hits)
            if produced > limit:
                return None
            for tail, v in hits:
                out[row + tail] = times(w, v)
    return out


def key_set(rows, idx):
    return set(map(_getter(idx), rows))


def filter_in(rows, idx, keys):
    key = _getter(idx)
    return {row: w for row, w in rows.items() if key(row) in keys}


def filter_out(rows, idx, keys):
    key = _getter(idx)
    return {row: w for row, w in rows.items() if key(row) not in keys}


def aggregate(rows, idx, plus):
    """Group by ``idx`` and fold annotations with ``plus``; returns (rows, merges)."""
    key = _getter(idx)
    out = {}
    merges = 0
    for row, w in rows.items():
        k = key(row)
        if k in out:
            out[k] = plus(out[k], w)
            merges += 1
        else:
            out[k] = w
    return out, merges


def project_one(rows, idx, one):
    key = _getter(idx)
    return dict.fromkeys(map(key, rows), one)


def group_count(rows, idx):
    key = _getter(idx)
    counts = {}
    for row in rows:
        k = key(row)
        counts[k] = counts.get(k, 0) + 1
    return counts
