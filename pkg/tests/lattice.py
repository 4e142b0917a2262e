"""Brute-force point-set oracle for zone operations.

Points live on the quarter-integer grid of ``[0, C + 5/4]^n``.  Half-integers
are not enough once three clocks are involved: ``0 < x < y < z < 1`` has no
half-integer point, while every region over n <= 3 clocks contains a point
with denominator 4.  Values are held in eighth units so the existential
quantifiers of ``up``, ``down``, ``free`` and ``reset`` can range over
eighth-integer witnesses (every non-empty interval with quarter-integer
endpoints contains one).  The oracle never looks at a DBM's closure; a zone
is just the list of constraints it was built from.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from tempo.dbm import INF, Dbm, Federation

Q = 8  # eighth units


def grid(n: int, c: int) -> np.ndarray:
    """All quarter-integer valuations, as an (N, n+1) array with column 0 = 0."""
    axis = [2 * k for k in range(4 * (c + 1) + 2)]
    pts = np.array(list(itertools.product(axis, repeat=n)), dtype=np.int64)
    return np.hstack([np.zeros((len(pts), 1), dtype=np.int64), pts])


def holds(cons: list[tuple[int, int, int]], pts: np.ndarray) -> np.ndarray:
    """Mask of points satisfying every ``x_i - x_j ⊴ b`` plus nonnegativity."""
    ok = np.all(pts[:, 1:] >= 0, axis=1) if pts.shape[1] > 1 else np.ones(len(pts), bool)
    for i, j, b in cons:
        if b == INF:
            continue
        diff = pts[:, i] - pts[:, j]
        c = Q * (b >> 1)
        ok &= (diff < c) | ((b & 1 == 1) & (diff == c))
    return ok


def dbm_cons(z: Dbm) -> list[tuple[int, int, int]]:
    d = z.dim
    return [(i, j, z.get(i, j)) for i in range(d) for j in range(d) if i != j]


def dbm_mask(z: Dbm, pts: np.ndarray) -> np.ndarray:
    if z.is_empty():
        return np.zeros(len(pts), bool)
    return holds(dbm_cons(z), pts)


def fed_mask(f: Federation, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts), bool)
    for z in f.zones:
        out |= dbm_mask(z, pts)
    return out


def shifts(c: int) -> range:
    return range(0, Q * (2 * c + 3) + 1)


def _search(cons, pts, candidates, move, dead=None) -> np.ndarray:
    """Points p with ``move(p, t)`` satisfying ``cons`` for some candidate t.

    A point leaves the search once it is accepted, or once ``dead`` says no
    later candidate can help it.
    """
    out = np.zeros(len(pts), bool)
    idx = np.arange(len(pts))
    for t in candidates:
        if not len(idx):
            break
        moved = move(pts[idx], t)
        ok = holds(cons, moved)
        out[idx[ok]] = True
        keep = ~ok
        if dead is not None:
            keep &= ~dead(moved)
        idx = idx[keep]
    return out


def _shift(sign: int):
    def move(p, t):
        q = p.copy()
        q[:, 1:] += sign * t
        return q

    return move


def up_mask(cons, pts, c: int) -> np.ndarray:
    # going further back only makes coordinates more negative
    return _search(cons, pts, shifts(c), _shift(-1), lambda q: np.any(q[:, 1:] < 0, axis=1))


def down_mask(cons, pts, c: int) -> np.ndarray:
    uppers = [(i, b) for i, j, b in cons if j == 0 and b != INF]

    def dead(q):
        # an upper bound broken now stays broken for every later shift
        gone = np.zeros(len(q), bool)
        for i, b in uppers:
            c8 = Q * (b >> 1)
            gone |= (q[:, i] > c8) | ((b & 1 == 0) & (q[:, i] == c8))
        return gone

    return _search(cons, pts, shifts(c), _shift(1), dead)


def free_mask(cons, pts, x: int, c: int) -> np.ndarray:
    above = [(i, j, b) for i, j, b in cons if i == x and b != INF]

    def move(p, v):
        q = p.copy()
        q[:, x] = v
        return q

    def dead(q):
        # x - y <= c fails for good once a larger x breaks it
        return ~holds(above, q) if above else np.zeros(len(q), bool)

    return _search(cons, pts, shifts(c), move, dead)


def reset_mask(cons, pts, x: int, c: int) -> np.ndarray:
    at_zero = pts[:, x] == 0
    out = np.zeros(len(pts), bool)
    out[at_zero] = free_mask(cons, pts[at_zero], x, c)
    return out


def random_constraints(rng: random.Random, n: int, c: int, k: int | None = None):
    """A handful of random difference constraints with constants in [-c, c]."""
    if k is None:
        k = rng.randint(0, 2 * n + 1)
    out = []
    for _ in range(k):
        i, j = rng.sample(range(n + 1), 2)
        if i == 0:
            const = -rng.randint(0, c)
        elif j == 0:
            const = rng.randint(0, c)
        else:
            const = rng.randint(-c, c)
        b = 2 * const + rng.randint(0, 1)
        out.append((i, j, b))
    return out


def box(n: int, c: int) -> list[tuple[int, int, int]]:
    """``x_i < c + 1`` for every clock; inside it the grid sees every region."""
    return [(i, 0, 2 * (c + 1)) for i in range(1, n + 1)]


def random_zone(rng: random.Random, n: int, c: int, boxed: bool = True):
    cons = random_constraints(rng, n, c)
    if boxed:
        cons += box(n, c)
    return cons, Dbm.from_constraints(n + 1, cons)
