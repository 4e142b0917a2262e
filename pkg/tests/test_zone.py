import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice import (
    dbm_mask,
    down_mask,
    fed_mask,
    free_mask,
    grid,
    holds,
    random_constraints,
    random_zone,
    reset_mask,
    up_mask,
)
from tempo.dbm import (
    INF,
    LE_ZERO,
    Dbm,
    Federation,
    MaxConstants,
    atoms_for,
    bound_add,
    canonicalize,
    down,
    extrapolate,
    fed_includes,
    fed_subtract,
    free,
    includes,
    is_empty,
    le,
    lt,
    reset,
    up,
)
from tempo.errors import ModelError

C = 4


def x_le(i, c):
    return atoms_for(i, 0, "<=", c)


def x_ge(i, c):
    return atoms_for(i, 0, ">=", c)


def is_canonical(z: Dbm) -> bool:
    d = z.dim
    for i in range(d):
        if z.get(i, i) != LE_ZERO or z.get(0, i) > LE_ZERO:
            return False
        for j in range(d):
            for k in range(d):
                if z.get(i, j) > bound_add(z.get(i, k), z.get(k, j)):
                    return False
    return True


# bounds


def test_bound_order_and_addition():
    assert lt(3) < le(3) < lt(4) < INF
    assert bound_add(le(2), le(3)) == le(5)
    assert bound_add(le(2), lt(3)) == lt(5)
    assert bound_add(lt(-1), lt(1)) == lt(0)
    assert bound_add(INF, le(0)) == INF


# worked examples


def test_canonicalize_examples():
    z = Dbm.from_constraints(2, x_le(1, 5) + x_ge(1, 2))
    assert canonicalize(z) == z
    z = Dbm.from_constraints(3, atoms_for(1, 2, "<=", 3) + x_le(2, 2) + x_le(1, 10))
    assert z.get(1, 0) == le(5)
    assert Dbm.from_constraints(2, x_le(1, 1) + x_ge(1, 2)).is_empty()


def test_is_empty_examples():
    assert not is_empty(Dbm.zero(3))
    assert is_empty(Dbm.from_constraints(2, x_le(1, 1) + x_ge(1, 2)))


def test_up_examples():
    ray = up(Dbm.zero(3))
    assert ray.get(1, 2) == LE_ZERO and ray.get(2, 1) == LE_ZERO and ray.get(1, 0) == INF
    z = Dbm.from_constraints(3, x_ge(1, 1) + x_le(1, 2) + x_le(2, 1) + atoms_for(1, 2, "==", 1))
    u = up(z)
    assert u.get(1, 0) == INF and u.get(2, 0) == INF
    assert u.get(1, 2) == le(1) and u.get(2, 1) == le(-1) and u.get(0, 1) == le(-1)
    assert up(u) == u


def test_down_examples():
    p = Dbm.from_constraints(3, atoms_for(1, 0, "==", 5) + atoms_for(2, 0, "==", 5))
    seg = down(p)
    assert seg.get(1, 0) == le(5) and seg.get(0, 1) == LE_ZERO and seg.get(1, 2) == LE_ZERO
    assert down(Dbm.zero(3)) == Dbm.zero(3)
    assert down(up(Dbm.zero(3))) == up(Dbm.zero(3))


def test_constrain_examples():
    z = Dbm.zero(3)
    assert z.constrain(x_le(1, 0)) == z
    c = up(Dbm.zero(3)).constrain(x_le(1, 5))
    assert c.get(1, 0) == le(5) and c.get(2, 0) == le(5) and c.get(1, 2) == LE_ZERO
    assert up(Dbm.zero(3)).constrain([(1, 0, lt(0))]).is_empty()
    with pytest.raises(ModelError):
        z.constrain([(3, 0, le(1))])


def test_reset_examples():
    z = Dbm.from_constraints(3, atoms_for(1, 0, "==", 5) + atoms_for(2, 0, "==", 5))
    r = reset(z, 1)
    assert r.get(1, 0) == LE_ZERO and r.get(2, 0) == le(5) and r.get(2, 1) == le(5)
    assert reset(Dbm.zero(3), 2) == Dbm.zero(3)
    assert r.constrain(atoms_for(1, 0, "==", 0)) == r
    with pytest.raises(ModelError):
        reset(z, 7)


def test_free_examples():
    f = free(Dbm.zero(3), 1)
    assert f.get(1, 0) == INF and f.get(2, 0) == LE_ZERO and f.get(0, 1) == LE_ZERO
    z = Dbm.from_constraints(3, x_ge(1, 2) + x_le(2, 3))
    assert includes(reset(free(z, 1), 1), reset(z, 1))


def test_includes_examples():
    z = Dbm.from_constraints(2, x_le(1, 3))
    assert includes(z, z)
    assert includes(up(Dbm.zero(3)), Dbm.zero(3))
    assert not includes(Dbm.zero(3), up(Dbm.zero(3)))
    with pytest.raises(ModelError):
        includes(Dbm.zero(2), Dbm.zero(3))


def test_extrapolate_examples():
    k = MaxConstants([0, 5])
    z = Dbm.from_constraints(2, x_le(1, 3))
    assert extrapolate(z, k) == z
    e = extrapolate(Dbm.from_constraints(2, x_le(1, 7)), k)
    assert e.get(1, 0) == INF
    e = extrapolate(Dbm.from_constraints(2, x_ge(1, 9)), k)
    assert e.get(0, 1) == lt(-5) and e.get(1, 0) == INF


def test_fed_subtract_examples():
    f = Federation.of(Dbm.from_constraints(2, x_le(1, 5)))
    assert fed_subtract(f, f).is_empty()
    g = Federation.of(Dbm.from_constraints(2, atoms_for(1, 0, ">", 2) + x_le(1, 5)))
    diff = fed_subtract(f, g)
    assert diff.zones == (Dbm.from_constraints(2, x_le(1, 2)),)
    assert fed_subtract(f, Federation(2)).same_set(f)


def test_fed_includes_examples():
    f = Federation.of(Dbm.from_constraints(2, x_le(1, 5)))
    assert fed_includes(f, f)
    assert not fed_includes(Federation(2), f)
    # a union covers a zone that neither member covers alone
    parts = Federation.of(
        Dbm.from_constraints(2, x_le(1, 3)), Dbm.from_constraints(2, x_ge(1, 2) + x_le(1, 5))
    )
    assert fed_includes(parts, f) and fed_includes(f, parts)


def test_federation_reduces_included_members():
    small = Dbm.from_constraints(2, x_le(1, 1))
    big = Dbm.from_constraints(2, x_le(1, 4))
    assert Federation.of(small, big).zones == (big,)
    assert Federation.of(big, small).zones == (big,)


# lattice oracle (hypothesis drives the seeds)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=3)
SET = settings(max_examples=150, deadline=None)
GRIDS = {n: grid(n, C) for n in (1, 2, 3)}


def case(seed, n):
    rng = random.Random(seed)
    return rng, GRIDS[n]


@SET
@given(seeds, dims)
def test_close_matches_oracle(seed, n):
    rng, pts = case(seed, n)
    cons, z = random_zone(rng, n, C)
    assert np.array_equal(dbm_mask(z, pts), holds(cons, pts))
    assert z.is_empty() == (not holds(cons, pts).any())
    if not z.is_empty():
        assert is_canonical(z)
        assert canonicalize(z) == z


@SET
@given(seeds, dims)
def test_up_down_match_oracle(seed, n):
    rng, pts = case(seed, n)
    cons, z = random_zone(rng, n, C, boxed=rng.random() < 0.7)
    if z.is_empty():
        return
    assert np.array_equal(dbm_mask(up(z), pts), up_mask(cons, pts, C))
    assert np.array_equal(dbm_mask(down(z), pts), down_mask(cons, pts, C))
    assert is_canonical(up(z)) and is_canonical(down(z))


@SET
@given(seeds, dims)
def test_reset_free_match_oracle(seed, n):
    rng, pts = case(seed, n)
    cons, z = random_zone(rng, n, C, boxed=rng.random() < 0.7)
    if z.is_empty():
        return
    x = rng.randint(1, n)
    assert np.array_equal(dbm_mask(free(z, x), pts), free_mask(cons, pts, x, C))
    assert np.array_equal(dbm_mask(reset(z, x), pts), reset_mask(cons, pts, x, C))


@SET
@given(seeds, dims)
def test_constrain_matches_oracle(seed, n):
    rng, pts = case(seed, n)
    cons, z = random_zone(rng, n, C)
    extra = random_constraints(rng, n, C, k=rng.randint(1, 3))
    got = z.constrain(extra)
    assert np.array_equal(dbm_mask(got, pts), holds(cons + extra, pts))


@SET
@given(seeds, dims)
def test_includes_matches_oracle(seed, n):
    rng, pts = case(seed, n)
    _, a = random_zone(rng, n, C)
    _, b = random_zone(rng, n, C)
    ma, mb = dbm_mask(a, pts), dbm_mask(b, pts)
    assert includes(a, b) == bool(np.all(ma | ~mb))


@SET
@given(seeds, dims)
def test_fed_subtract_matches_oracle(seed, n):
    rng, pts = case(seed, n)
    fa = Federation(n + 1, [random_zone(rng, n, C)[1].raw for _ in range(rng.randint(1, 3))])
    fb = Federation(n + 1, [random_zone(rng, n, C)[1].raw for _ in range(rng.randint(1, 3))])
    diff = fed_subtract(fa, fb)
    ma, mb = fed_mask(fa, pts), fed_mask(fb, pts)
    assert np.array_equal(fed_mask(diff, pts), ma & ~mb)
    assert fed_includes(fa, fb) == bool(np.all(ma | ~mb))
    # a \ b together with a ∩ b gives a back
    assert fed_mask(diff.union(fa.intersect(fb)), pts).tolist() == ma.tolist()
    for z in diff.zones:
        assert not z.is_empty() and is_canonical(z)


@SET
@given(seeds, dims)
def test_extrapolate_is_extensive(seed, n):
    rng, pts = case(seed, n)
    _, z = random_zone(rng, n, C)
    k = MaxConstants([0] + [rng.randint(0, C) for _ in range(n)])
    e = extrapolate(z, k)
    assert includes(e, z)
    assert extrapolate(e, k) == e


@SET
@given(seeds, dims)
def test_up_down_monotone(seed, n):
    rng, _ = case(seed, n)
    _, a = random_zone(rng, n, C)
    b = a.constrain(random_constraints(rng, n, C, k=2))
    if b.is_empty():
        return
    assert includes(up(a), up(b)) and includes(down(a), down(b))


def test_extrapolation_keeps_reachability_on_one_clock():
    # one clock, self-loop resetting nothing; reach x > 5 from x in [0, 2]
    k = MaxConstants([0, 5])
    z = up(Dbm.from_constraints(2, x_le(1, 2)))
    for target in (atoms_for(1, 0, ">", 5), atoms_for(1, 0, ">=", 3)):
        exact = not z.constrain(target).is_empty()
        abstract = not extrapolate(z, k).constrain(target).is_empty()
        assert exact == abstract
