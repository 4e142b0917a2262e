import random

import pytest

from lattice import random_constraints
from tempo import _pykernels as py

ck = pytest.importorskip("tempo._ckernels")


def build(k, cons, d):
    vals = [k.INF] * (d * d)
    for i in range(d):
        vals[i * d + i] = k.LE_ZERO
        vals[i] = k.LE_ZERO
    return k.constrain_all(k.pack(vals, d), d, cons)


def as_list(k, raw, d):
    return None if raw is None else k.unpack(raw, d)


@pytest.mark.parametrize("seed", range(300))
def test_backends_agree(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    d = n + 1
    ca, cb = random_constraints(rng, n, 5), random_constraints(rng, n, 5)
    pa, pb = build(py, ca, d), build(py, cb, d)
    qa, qb = build(ck, ca, d), build(ck, cb, d)
    assert as_list(py, pa, d) == as_list(ck, qa, d)
    if pa is None or pb is None:
        return
    x = rng.randint(1, n)
    kmax = [0] + [rng.randint(0, 5) for _ in range(n)]
    for name, args in [
        ("up", ()), ("down", ()), ("reset", (x,)), ("free", (x,)),
        ("extrapolate", (kmax,)), ("close", ()),
    ]:
        assert as_list(py, getattr(py, name)(pa, d, *args), d) == as_list(
            ck, getattr(ck, name)(qa, d, *args), d
        ), name
    assert as_list(py, py.intersect(pa, pb, d), d) == as_list(ck, ck.intersect(qa, qb, d), d)
    assert py.includes(pa, pb, d) == ck.includes(qa, qb, d)
    assert [py.unpack(r, d) for r in py.subtract(pa, pb, d)] == [
        ck.unpack(r, d) for r in ck.subtract(qa, qb, d)
    ]
