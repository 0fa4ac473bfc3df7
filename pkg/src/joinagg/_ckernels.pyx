# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of the functions in ``_kernels_py``."""

from cpython.ref cimport Py_INCREF
from cpython.tuple cimport PyTuple_New, PyTuple_SET_ITEM

cdef enum:
    MAX_ARITY = 64


cdef int _load(tuple idx, Py_ssize_t* buf) except -1:
    cdef Py_ssize_t n = len(idx)
    cdef Py_ssize_t j
    if n > MAX_ARITY:
        raise ValueError("schema wider than 64 attributes")
    for j in range(n):
        buf[j] = <Py_ssize_t>idx[j]
    return n


cdef inline tuple _pick(tuple row, Py_ssize_t* idx, Py_ssize_t n):
    cdef tuple out = PyTuple_New(n)
    cdef object item
    cdef Py_ssize_t j
    for j in range(n):
        item = row[idx[j]]
        Py_INCREF(item)
        PyTuple_SET_ITEM(out, j, item)
    return out


def hash_join(dict left, dict right, tuple lidx, tuple ridx, tuple rrest,
              times, Py_ssize_t limit, bint build_left):
    cdef Py_ssize_t lk[MAX_ARITY]
    cdef Py_ssize_t rk[MAX_ARITY]
    cdef Py_ssize_t rt[MAX_ARITY]
    cdef Py_ssize_t nl = _load(lidx, lk)
    cdef Py_ssize_t nr = _load(ridx, rk)
    cdef Py_ssize_t nt = _load(rrest, rt)
    cdef dict index = {}
    cdef dict out = {}
    cdef Py_ssize_t produced = 0
    cdef tuple row, key, tail, lrow
    cdef list hits
    cdef object w, v, entry
    if build_left:
        for row, w in left.items():
            key = _pick(row, lk, nl)
            hits = index.get(key)
            if hits is None:
                index[key] = [(row, w)]
            else:
                hits.append((row, w))
        for row, v in right.items():
            hits = index.get(_pick(row, rk, nr))
            if hits is None:
                continue
            produced += len(hits)
            if produced > limit:
                return None
            tail = _pick(row, rt, nt)
            for entry in hits:
                lrow = entry[0]
                out[lrow + tail] = times(entry[1], v)
    else:
        for row, v in right.items():
            key = _pick(row, rk, nr)
            hits = index.get(key)
            if hits is None:
                index[key] = [(_pick(row, rt, nt), v)]
            else:
                hits.append((_pick(row, rt, nt), v))
        for row, w in left.items():
            hits = index.get(_pick(row, lk, nl))
            if hits is None:
                continue
            produced += len(hits)
            if produced > limit:
                return None
            for entry in hits:
                tail = entry[0]
                out[row + tail] = times(w, entry[1])
    return out


def key_set(dict rows, tuple idx):
    cdef Py_ssize_t k[MAX_ARITY]
    cdef Py_ssize_t n = _load(idx, k)
    cdef set out = set()
    cdef tuple row
    for row in rows:
        out.add(_pick(row, k, n))
    return out


def filter_in(dict rows, tuple idx, keys):
    cdef Py_ssize_t k[MAX_ARITY]
    cdef Py_ssize_t n = _load(idx, k)
    cdef dict out = {}
    cdef tuple row
    for row, w in rows.items():
        if _pick(row, k, n) in keys:
            out[row] = w
    return out


def filter_out(dict rows, tuple idx, keys):
    cdef Py_ssize_t k[MAX_ARITY]
    cdef Py_ssize_t n = _load(idx, k)
    cdef dict out = {}
    cdef tuple row
    for row, w in rows.items():
        if _pick(row, k, n) not in keys:
            out[row] = w
    return out


def aggregate(dict rows, tuple idx, plus):
    cdef Py_ssize_t k[MAX_ARITY]
    cdef Py_ssize_t n = _load(idx, k)
    cdef dict out = {}
    cdef Py_ssize_t merges = 0
    cdef tuple row, key
    cdef object w, prev
    for row, w in rows.items():
        key = _pick(row, k, n)
        prev = out.get(key, out)
        if prev is out:
            out[key] = w
        else:
            out[key] = plus(prev, w)
            merges += 1
    return out, merges


def project_one(dict rows, tuple idx, one):
    cdef Py_ssize_t k[MAX_ARITY]
    cdef Py_ssize_t n = _load(idx, k)
    cdef dict out = {}
    cdef tuple row
    for row in rows:
        out[_pick(row, k, n)] = one
    return out


def group_count(dict rows, tuple idx):
    cdef Py_ssize_t k[MAX_ARITY]
    cdef Py_ssize_t n = _load(idx, k)
    cdef dict counts = {}
    cdef tuple row, key
    for row in rows:
        key = _pick(row, k, n)
        counts[key] = counts.get(key, 0) + 1
    return counts
