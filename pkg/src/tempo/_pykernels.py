"""Pure-Python DBM kernels.

A DBM of dimension ``d`` is stored row-major as a flat tuple of ``d * d``
encoded bounds.  Entry ``(i, j)`` bounds ``x_i - x_j``; index 0 is the
reference clock.  A bound ``(c, <=)`` is encoded as ``2c + 1``, ``(c, <)`` as
``2c`` and infinity as :data:`INF`.  Kernels that can produce the empty set
return ``None`` instead of a matrix.

:mod:`tempo._ckernels` implements the same functions in Cython on a packed
``bytes`` representation; :mod:`tempo.kernels` picks one at import time.
"""

INF = 1 << 60
LE_ZERO = 1
BACKEND = "python"


def add(a, b):
    if a == INF or b == INF:
        return INF
    return a + b - ((a | b) & 1)


def pack(values, d):
    return tuple(values)


def unpack(raw, d):
    return list(raw)


def get(raw, d, i, j):
    return raw[i * d + j]


def close(raw, d):
    m = list(raw)
    for k in range(d):
        rk = k * d
        for i in range(d):
            ri = i * d
            ik = m[ri + k]
            if ik == INF:
                continue
            for j in range(d):
                kj = m[rk + j]
                if kj == INF:
                    continue
                s = ik + kj - ((ik | kj) & 1)
                if s < m[ri + j]:
                    m[ri + j] = s
        if m[rk + k] < LE_ZERO:
            return None
    for i in range(d):
        if m[i * d + i] < LE_ZERO:
            return None
        m[i * d + i] = LE_ZERO
    return tuple(m)


def constrain(raw, d, i, j, b):
    """Intersect a canonical DBM with ``x_i - x_j ⊴ b``; O(d^2)."""
    if b >= raw[i * d + j]:
        return raw
    ji = raw[j * d + i]
    if ji != INF and ji + b - ((ji | b) & 1) < LE_ZERO:
        return None
    m = list(raw)
    m[i * d + j] = b
    rj = j * d
    for k in range(d):
        ki = m[k * d + i]
        if ki == INF:
            continue
        kib = ki + b - ((ki | b) & 1)
        rk = k * d
        for l in range(d):
            jl = m[rj + l]
            if jl == INF:
                continue
            s = kib + jl - ((kib | jl) & 1)
            if s < m[rk + l]:
                m[rk + l] = s
    return tuple(m)


def constrain_all(raw, d, triples):
    for i, j, b in triples:
        raw = constrain(raw, d, i, j, b)
        if raw is None:
            return None
    return raw


def intersect(a, b, d):
    m = a
    for idx in range(d * d):
        bb = b[idx]
        if bb < m[idx]:
            m = constrain(m, d, idx // d, idx % d, bb)
            if m is None:
                return None
    return m


def intersects(a, b, d):
    return intersect(a, b, d) is not None


def includes(a, b, d):
    for x, y in zip(a, b):
        if x < y:
            return False
    return True


def up(raw, d):
    m = list(raw)
    for i in range(1, d):
        m[i * d] = INF
    return tuple(m)


def down(raw, d):
    m = list(raw)
    for j in range(1, d):
        best = LE_ZERO
        for i in range(1, d):
            v = m[i * d + j]
            if v < best:
                best = v
        m[j] = best
    return tuple(m)


def reset(raw, d, x):
    m = list(raw)
    rx = x * d
    for k in range(d):
        m[rx + k] = m[k]
        m[k * d + x] = m[k * d]
    m[rx + x] = LE_ZERO
    return tuple(m)


def free(raw, d, x):
    m = list(raw)
    rx = x * d
    for k in range(d):
        if k != x:
            m[rx + k] = INF
            m[k * d + x] = m[k * d]
    m[rx + x] = LE_ZERO
    m[x] = LE_ZERO
    return tuple(m)


def extrapolate(raw, d, kmax):
    """Classic k-normalisation; ``kmax[0]`` must be 0."""
    m = list(raw)
    changed = False
    for i in range(d):
        upper = 2 * kmax[i] + 1
        ri = i * d
        for j in range(d):
            if i == j:
                continue
            v = m[ri + j]
            if v == INF:
                continue
            if v > upper:
                m[ri + j] = INF
                changed = True
            else:
                lower = -2 * kmax[j]
                if v < lower:
                    m[ri + j] = lower
                    changed = True
    if not changed:
        return raw
    return close(m, d)


def subtract(a, b, d):
    """Return disjoint canonical DBMs whose union is ``a \\ b``."""
    if intersect(a, b, d) is None:
        return [a]
    out = []
    cur = a
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            bb = b[i * d + j]
            if bb == INF or bb >= cur[i * d + j]:
                continue
            piece = constrain(cur, d, j, i, 1 - bb)
            if piece is not None:
                out.append(piece)
            cur = constrain(cur, d, i, j, bb)
            if cur is None:
                return out
    return out
