# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled DBM kernels.

Same contract as :mod:`tempo._pykernels`, but a matrix is a ``bytes`` object
holding ``d * d`` native int64 bounds.  Keeping the packed form between calls
avoids converting Python ints on every operation.
"""

from cpython.bytes cimport PyBytes_AS_STRING, PyBytes_FromStringAndSize
from libc.string cimport memcpy

ctypedef long long bound_t

cdef bound_t C_INF = 1152921504606846976  # 1 << 60
cdef bound_t C_LE_ZERO = 1

INF = C_INF
LE_ZERO = C_LE_ZERO
BACKEND = "cython"


cdef inline bound_t badd(bound_t a, bound_t b) nogil:
    if a == C_INF or b == C_INF:
        return C_INF
    return a + b - ((a | b) & 1)


cdef inline bytes new_matrix(Py_ssize_t n):
    return PyBytes_FromStringAndSize(NULL, n * sizeof(bound_t))


cdef inline bound_t* buf(bytes raw):
    return <bound_t*> PyBytes_AS_STRING(raw)


cdef inline bytes copy_of(bytes raw, Py_ssize_t n):
    cdef bytes out = new_matrix(n)
    memcpy(buf(out), buf(raw), n * sizeof(bound_t))
    return out


def add(a, b):
    return badd(a, b)


def pack(values, Py_ssize_t d):
    cdef Py_ssize_t n = d * d, k
    cdef bytes out = new_matrix(n)
    cdef bound_t* m = buf(out)
    for k in range(n):
        m[k] = values[k]
    return out


def unpack(bytes raw, Py_ssize_t d):
    cdef bound_t* m = buf(raw)
    return [m[k] for k in range(d * d)]


def get(bytes raw, Py_ssize_t d, Py_ssize_t i, Py_ssize_t j):
    return buf(raw)[i * d + j]


cdef bint close_inplace(bound_t* m, Py_ssize_t d) nogil:
    cdef Py_ssize_t i, j, k
    cdef bound_t ik, kj, s
    for k in range(d):
        for i in range(d):
            ik = m[i * d + k]
            if ik == C_INF:
                continue
            for j in range(d):
                kj = m[k * d + j]
                if kj == C_INF:
                    continue
                s = ik + kj - ((ik | kj) & 1)
                if s < m[i * d + j]:
                    m[i * d + j] = s
        if m[k * d + k] < C_LE_ZERO:
            return False
    for i in range(d):
        if m[i * d + i] < C_LE_ZERO:
            return False
        m[i * d + i] = C_LE_ZERO
    return True


def close(bytes raw, Py_ssize_t d):
    cdef bytes out = copy_of(raw, d * d)
    if not close_inplace(buf(out), d):
        return None
    return out


cdef bint constrain_inplace(bound_t* m, Py_ssize_t d, Py_ssize_t i,
                            Py_ssize_t j, bound_t b) nogil:
    # Caller guarantees b < m[i][j]; returns False when the result is empty.
    cdef Py_ssize_t k, l
    cdef bound_t ji = m[j * d + i], ki, kib, jl, s
    if ji != C_INF and ji + b - ((ji | b) & 1) < C_LE_ZERO:
        return False
    m[i * d + j] = b
    for k in range(d):
        ki = m[k * d + i]
        if ki == C_INF:
            continue
        kib = ki + b - ((ki | b) & 1)
        for l in range(d):
            jl = m[j * d + l]
            if jl == C_INF:
                continue
            s = kib + jl - ((kib | jl) & 1)
            if s < m[k * d + l]:
                m[k * d + l] = s
    return True


def constrain(bytes raw, Py_ssize_t d, Py_ssize_t i, Py_ssize_t j, bound_t b):
    if b >= buf(raw)[i * d + j]:
        return raw
    cdef bytes out = copy_of(raw, d * d)
    if not constrain_inplace(buf(out), d, i, j, b):
        return None
    return out


def constrain_all(bytes raw, Py_ssize_t d, triples):
    cdef bytes out = None
    cdef bound_t* m
    cdef Py_ssize_t i, j
    cdef bound_t b
    for i, j, b in triples:
        if out is None:
            if b >= buf(raw)[i * d + j]:
                continue
            out = copy_of(raw, d * d)
        m = buf(out)
        if b >= m[i * d + j]:
            continue
        if not constrain_inplace(m, d, i, j, b):
            return None
    return raw if out is None else out


def intersect(bytes a, bytes b, Py_ssize_t d):
    cdef Py_ssize_t n = d * d, idx
    cdef bound_t* pb = buf(b)
    cdef bound_t* pa = buf(a)
    cdef bytes out = None
    cdef bound_t* m = pa
    for idx in range(n):
        if pb[idx] < m[idx]:
            if out is None:
                out = copy_of(a, n)
                m = buf(out)
            if not constrain_inplace(m, d, idx // d, idx % d, pb[idx]):
                return None
    return a if out is None else out


def intersects(bytes a, bytes b, Py_ssize_t d):
    return intersect(a, b, d) is not None


def includes(bytes a, bytes b, Py_ssize_t d):
    cdef Py_ssize_t k
    cdef bound_t* pa = buf(a)
    cdef bound_t* pb = buf(b)
    for k in range(d * d):
        if pa[k] < pb[k]:
            return False
    return True


def up(bytes raw, Py_ssize_t d):
    cdef bytes out = copy_of(raw, d * d)
    cdef bound_t* m = buf(out)
    cdef Py_ssize_t i
    for i in range(1, d):
        m[i * d] = C_INF
    return out


def down(bytes raw, Py_ssize_t d):
    cdef bytes out = copy_of(raw, d * d)
    cdef bound_t* m = buf(out)
    cdef Py_ssize_t i, j
    cdef bound_t best
    for j in range(1, d):
        best = C_LE_ZERO
        for i in range(1, d):
            if m[i * d + j] < best:
                best = m[i * d + j]
        m[j] = best
    return out


def reset(bytes raw, Py_ssize_t d, Py_ssize_t x):
    cdef bytes out = copy_of(raw, d * d)
    cdef bound_t* m = buf(out)
    cdef Py_ssize_t k
    for k in range(d):
        m[x * d + k] = m[k]
        m[k * d + x] = m[k * d]
    m[x * d + x] = C_LE_ZERO
    return out


def free(bytes raw, Py_ssize_t d, Py_ssize_t x):
    cdef bytes out = copy_of(raw, d * d)
    cdef bound_t* m = buf(out)
    cdef Py_ssize_t k
    for k in range(d):
        if k != x:
            m[x * d + k] = C_INF
            m[k * d + x] = m[k * d]
    m[x * d + x] = C_LE_ZERO
    m[x] = C_LE_ZERO
    return out


def extrapolate(bytes raw, Py_ssize_t d, kmax):
    cdef bytes out = copy_of(raw, d * d)
    cdef bound_t* m = buf(out)
    cdef Py_ssize_t i, j
    cdef bound_t v, upper, lower
    cdef bint changed = False
    cdef list ks = [int(k) for k in kmax]
    for i in range(d):
        upper = 2 * <bound_t> ks[i] + 1
        for j in range(d):
            if i == j:
                continue
            v = m[i * d + j]
            if v == C_INF:
                continue
            if v > upper:
                m[i * d + j] = C_INF
                changed = True
            else:
                lower = -2 * <bound_t> ks[j]
                if v < lower:
                    m[i * d + j] = lower
                    changed = True
    if not changed:
        return raw
    if not close_inplace(m, d):
        return None
    return out


def subtract(bytes a, bytes b, Py_ssize_t d):
    if intersect(a, b, d) is None:
        return [a]
    cdef list out = []
    cdef bytes cur = a, piece
    cdef bound_t* pb = buf(b)
    cdef bound_t bb
    cdef Py_ssize_t i, j, n = d * d
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            bb = pb[i * d + j]
            if bb == C_INF or bb >= buf(cur)[i * d + j]:
                continue
            if 1 - bb >= buf(cur)[j * d + i]:
                out.append(cur)
                return out
            piece = copy_of(cur, n)
            if constrain_inplace(buf(piece), d, j, i, 1 - bb):
                out.append(piece)
            cur = copy_of(cur, n)
            if not constrain_inplace(buf(cur), d, i, j, bb):
                return out
    return out
