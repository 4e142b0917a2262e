"""Zones as difference-bound matrices, and federations (finite unions of zones).

Bounds are packed integers: ``(c, <=)`` is ``2c + 1``, ``(c, <)`` is ``2c``
and :data:`INF` stands for "no bound".  With this encoding the natural integer
order is the bound order and :func:`bound_add` is a few integer operations.

A :class:`Dbm` of dimension ``d`` constrains clocks ``x_1 .. x_{d-1}``; index 0
is the reference clock that is always 0.  Every public operation returns a
canonical matrix, or an empty Dbm.  The heavy lifting is done by
:mod:`tempo.kernels` (compiled when available).
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

from tempo.errors import ModelError
from tempo.kernels import backend as _k

INF = _k.INF
LE_ZERO = _k.LE_ZERO
LT_ZERO = 0


def le(c: int) -> int:
    return 2 * c + 1


def lt(c: int) -> int:
    return 2 * c


def bound_add(a: int, b: int) -> int:
    if a == INF or b == INF:
        return INF
    return a + b - ((a | b) & 1)


def bound_neg(b: int) -> int:
    """Bound of the complement: not (x <= c) is -x < -c."""
    return 1 - b


def bound_const(b: int) -> int:
    return b >> 1


def bound_is_strict(b: int) -> bool:
    return not (b & 1)


def bound_str(b: int) -> str:
    if b == INF:
        return "<inf"
    return ("<=" if b & 1 else "<") + str(b >> 1)


def atoms_for(i: int, j: int, rel: str, c: int) -> list[tuple[int, int, int]]:
    """Encode ``x_i - x_j rel c`` as a list of (row, col, bound) triples."""
    if rel == "<=":
        return [(i, j, le(c))]
    if rel == "<":
        return [(i, j, lt(c))]
    if rel in ("==", "="):
        return [(i, j, le(c)), (j, i, le(-c))]
    if rel == ">=":
        return [(j, i, le(-c))]
    if rel == ">":
        return [(j, i, lt(-c))]
    raise ValueError(f"unsupported relation {rel!r}")


def satisfies(diff, b: int) -> bool:
    if b == INF:
        return True
    c = b >> 1
    return diff < c or (bool(b & 1) and diff == c)


class MaxConstants:
    """Per-clock maximal constants; ``values[0]`` belongs to the reference clock."""

    __slots__ = ("values",)

    def __init__(self, values: Sequence[int]):
        vals = [max(0, int(v)) for v in values]
        if vals:
            vals[0] = 0
        self.values = tuple(vals)

    @classmethod
    def zeros(cls, dim: int) -> "MaxConstants":
        return cls([0] * dim)

    def merge(self, other: "MaxConstants") -> "MaxConstants":
        n = max(len(self.values), len(other.values))
        a = self.values + (0,) * (n - len(self.values))
        b = other.values + (0,) * (n - len(other.values))
        return MaxConstants([max(x, y) for x, y in zip(a, b)])

    def extended(self, dim: int) -> "MaxConstants":
        return MaxConstants(self.values + (0,) * (dim - len(self.values)))

    def __getitem__(self, i: int) -> int:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, MaxConstants) and self.values == other.values

    def __hash__(self) -> int:
        return hash(self.values)

    def __repr__(self) -> str:
        return f"MaxConstants({list(self.values)})"


class Dbm:
    """Immutable canonical zone.  ``raw is None`` marks the empty zone."""

    __slots__ = ("dim", "raw")

    def __init__(self, dim: int, raw):
        self.dim = dim
        self.raw = raw

    # construction

    @classmethod
    def zero(cls, dim: int) -> "Dbm":
        return cls(dim, _k.pack([LE_ZERO] * (dim * dim), dim))

    @classmethod
    def universe(cls, dim: int) -> "Dbm":
        """All nonnegative valuations."""
        vals = [INF] * (dim * dim)
        for i in range(dim):
            vals[i * dim + i] = LE_ZERO
            vals[i] = LE_ZERO
        return cls(dim, _k.pack(vals, dim))

    @classmethod
    def empty(cls, dim: int) -> "Dbm":
        return cls(dim, None)

    @classmethod
    def from_matrix(cls, dim: int, values: Sequence[int]) -> "Dbm":
        """Canonicalize an arbitrary bound matrix (row-major)."""
        if len(values) != dim * dim:
            raise ModelError(f"matrix has {len(values)} entries, expected {dim * dim}")
        vals = list(values)
        for i in range(dim):
            vals[i] = min(vals[i], LE_ZERO)
            vals[i * dim + i] = min(vals[i * dim + i], LE_ZERO)
        return cls(dim, _k.close(_k.pack(vals, dim), dim))

    @classmethod
    def from_constraints(cls, dim: int, atoms: Iterable[tuple[int, int, int]]) -> "Dbm":
        return cls.universe(dim).constrain(atoms)

    # inspection

    def is_empty(self) -> bool:
        return self.raw is None

    def get(self, i: int, j: int) -> int:
        return _k.get(self.raw, self.dim, i, j)

    def matrix(self) -> list[list[int]]:
        flat = _k.unpack(self.raw, self.dim)
        d = self.dim
        return [flat[r * d:(r + 1) * d] for r in range(d)]

    def contains(self, point: Sequence) -> bool:
        """Membership of a valuation given without the reference clock."""
        if self.raw is None:
            return False
        v = [0, *point]
        d = self.dim
        flat = _k.unpack(self.raw, d)
        for i in range(d):
            for j in range(d):
                if i != j and not satisfies(v[i] - v[j], flat[i * d + j]):
                    return False
        return True

    def upper(self, x: int) -> int:
        return self.get(x, 0)

    def lower(self, x: int) -> int:
        return self.get(0, x)

    def __eq__(self, other) -> bool:
        return isinstance(other, Dbm) and self.dim == other.dim and self.raw == other.raw

    def __hash__(self) -> int:
        return hash((self.dim, self.raw))

    def __repr__(self) -> str:
        if self.raw is None:
            return f"Dbm(dim={self.dim}, empty)"
        return f"Dbm({self.describe()})"

    def describe(self, names: Sequence[str] | None = None) -> str:
        if self.raw is None:
            return "false"
        d = self.dim
        names = list(names) if names else [f"x{i}" for i in range(1, d)]
        label = ["0", *names]
        parts = []
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                b = self.get(i, j)
                if b == INF or (i == 0 and b == LE_ZERO):
                    continue
                if j == 0:
                    parts.append(f"{label[i]}{bound_str(b)}")
                elif i == 0:
                    op = ">=" if b & 1 else ">"
                    parts.append(f"{label[j]}{op}{-(b >> 1)}")
                else:
                    parts.append(f"{label[i]}-{label[j]}{bound_str(b)}")
        return " && ".join(parts) or "true"

    # operations

    def _check(self, x: int) -> None:
        if not 0 <= x < self.dim:
            raise ModelError(f"clock index {x} out of range for dimension {self.dim}")

    def up(self) -> "Dbm":
        if self.raw is None:
            return self
        return Dbm(self.dim, _k.up(self.raw, self.dim))

    def down(self) -> "Dbm":
        if self.raw is None:
            return self
        return Dbm(self.dim, _k.down(self.raw, self.dim))

    def constrain(self, atoms: Iterable[tuple[int, int, int]]) -> "Dbm":
        atoms = list(atoms)
        for i, j, _ in atoms:
            self._check(i)
            self._check(j)
        if self.raw is None:
            return self
        return Dbm(self.dim, _k.constrain_all(self.raw, self.dim, atoms))

    def reset(self, x: int) -> "Dbm":
        self._check(x)
        if self.raw is None or x == 0:
            return self
        return Dbm(self.dim, _k.reset(self.raw, self.dim, x))

    def free(self, x: int) -> "Dbm":
        self._check(x)
        if self.raw is None or x == 0:
            return self
        return Dbm(self.dim, _k.free(self.raw, self.dim, x))

    def includes(self, other: "Dbm") -> bool:
        if self.dim != other.dim:
            raise ModelError("dimension mismatch")
        if other.raw is None:
            return True
        if self.raw is None:
            return False
        return _k.includes(self.raw, other.raw, self.dim)

    def intersect(self, other: "Dbm") -> "Dbm":
        if self.dim != other.dim:
            raise ModelError("dimension mismatch")
        if self.raw is None or other.raw is None:
            return Dbm(self.dim, None)
        return Dbm(self.dim, _k.intersect(self.raw, other.raw, self.dim))

    def extrapolate(self, k: MaxConstants | Sequence[int]) -> "Dbm":
        vals = list(k.values if isinstance(k, MaxConstants) else k)
        if len(vals) < self.dim:
            raise ModelError("max constants do not cover every clock")
        vals[0] = 0
        if self.raw is None:
            return self
        return Dbm(self.dim, _k.extrapolate(self.raw, self.dim, vals[: self.dim]))

    def subtract(self, other: "Dbm") -> list["Dbm"]:
        if self.dim != other.dim:
            raise ModelError("dimension mismatch")
        if self.raw is None:
            return []
        if other.raw is None:
            return [self]
        return [Dbm(self.dim, r) for r in _k.subtract(self.raw, other.raw, self.dim)]


def canonicalize(z: Dbm) -> Dbm:
    if z.raw is None:
        return z
    return Dbm(z.dim, _k.close(z.raw, z.dim))


def is_empty(z: Dbm) -> bool:
    return z.is_empty()


def up(z: Dbm) -> Dbm:
    return z.up()


def down(z: Dbm) -> Dbm:
    return z.down()


def constrain(z: Dbm, atoms: Iterable[tuple[int, int, int]]) -> Dbm:
    return z.constrain(atoms)


def reset(z: Dbm, clock: int) -> Dbm:
    return z.reset(clock)


def free(z: Dbm, clock: int) -> Dbm:
    return z.free(clock)


def includes(a: Dbm, b: Dbm) -> bool:
    return a.includes(b)


def extrapolate(z: Dbm, k: MaxConstants | Sequence[int]) -> Dbm:
    return z.extrapolate(k)


# federations
#
# Internally a federation is a tuple of raw kernel matrices so the fixpoint
# loops never pay for wrapper objects.


def _insert(raws: list, r, d: int) -> None:
    for o in raws:
        if _k.includes(o, r, d):
            return
    raws[:] = [o for o in raws if not _k.includes(r, o, d)]
    raws.append(r)


def _raw_subtract(raws: Iterable, sub: Sequence, d: int) -> list:
    out = []
    for r in raws:
        pieces = [r]
        for s in sub:
            nxt = []
            for p in pieces:
                if not _k.intersects(p, s, d):
                    nxt.append(p)
                elif not _k.includes(s, p, d):
                    nxt.extend(_k.subtract(p, s, d))
            pieces = nxt
            if not pieces:
                break
        for p in pieces:
            _insert(out, p, d)
    return out


class Federation:
    """Immutable union of non-empty canonical zones, no member inside another."""

    __slots__ = ("dim", "raws")

    def __init__(self, dim: int, raws: Iterable = ()):
        self.dim = dim
        acc: list = []
        for r in raws:
            if r is not None:
                _insert(acc, r, dim)
        self.raws = tuple(acc)

    @classmethod
    def _trusted(cls, dim: int, raws: Iterable) -> "Federation":
        f = cls.__new__(cls)
        f.dim = dim
        f.raws = tuple(raws)
        return f

    @classmethod
    def of(cls, *zones: Dbm) -> "Federation":
        if not zones:
            raise ValueError("Federation.of needs at least one zone; use Federation(dim)")
        dim = zones[0].dim
        for z in zones:
            if z.dim != dim:
                raise ModelError("dimension mismatch")
        return cls(dim, [z.raw for z in zones])

    @classmethod
    def universe(cls, dim: int) -> "Federation":
        return cls._trusted(dim, [Dbm.universe(dim).raw])

    @property
    def zones(self) -> tuple[Dbm, ...]:
        return tuple(Dbm(self.dim, r) for r in self.raws)

    def __iter__(self) -> Iterator[Dbm]:
        return iter(self.zones)

    def __len__(self) -> int:
        return len(self.raws)

    def is_empty(self) -> bool:
        return not self.raws

    def __bool__(self) -> bool:
        return bool(self.raws)

    def __repr__(self) -> str:
        return "Federation[" + " | ".join(z.describe() for z in self.zones) + "]"

    def _same(self, other: "Federation") -> None:
        if self.dim != other.dim:
            raise ModelError("dimension mismatch")

    def contains(self, point: Sequence) -> bool:
        return any(z.contains(point) for z in self.zones)

    def union(self, other: "Federation") -> "Federation":
        self._same(other)
        acc = list(self.raws)
        for r in other.raws:
            _insert(acc, r, self.dim)
        return Federation._trusted(self.dim, acc)

    def add(self, z: Dbm) -> "Federation":
        if z.raw is None:
            return self
        acc = list(self.raws)
        _insert(acc, z.raw, self.dim)
        return Federation._trusted(self.dim, acc)

    def intersect(self, other: "Federation") -> "Federation":
        self._same(other)
        d = self.dim
        acc: list = []
        for a in self.raws:
            for b in other.raws:
                r = _k.intersect(a, b, d)
                if r is not None:
                    _insert(acc, r, d)
        return Federation._trusted(d, acc)

    def intersect_zone(self, z: Dbm) -> "Federation":
        if z.raw is None:
            return Federation(self.dim)
        d = self.dim
        acc: list = []
        for a in self.raws:
            r = _k.intersect(a, z.raw, d)
            if r is not None:
                _insert(acc, r, d)
        return Federation._trusted(d, acc)

    def subtract(self, other: "Federation") -> "Federation":
        self._same(other)
        if not other.raws:
            return self
        return Federation._trusted(self.dim, _raw_subtract(self.raws, other.raws, self.dim))

    def includes(self, other: "Federation") -> bool:
        self._same(other)
        d = self.dim
        rest = []
        for b in other.raws:
            if not any(_k.includes(a, b, d) for a in self.raws):
                rest.append(b)
        if not rest:
            return True
        return not _raw_subtract(rest, self.raws, d)

    def _map(self, fn) -> "Federation":
        return Federation(self.dim, [fn(r) for r in self.raws])

    def up(self) -> "Federation":
        return self._map(lambda r: _k.up(r, self.dim))

    def down(self) -> "Federation":
        return self._map(lambda r: _k.down(r, self.dim))

    def constrain(self, atoms: Iterable[tuple[int, int, int]]) -> "Federation":
        atoms = list(atoms)
        return self._map(lambda r: _k.constrain_all(r, self.dim, atoms))

    def reset(self, x: int) -> "Federation":
        return self._map(lambda r: _k.reset(r, self.dim, x))

    def free(self, x: int) -> "Federation":
        return self._map(lambda r: _k.free(r, self.dim, x))

    def extrapolate(self, k: MaxConstants | Sequence[int]) -> "Federation":
        return Federation(self.dim, [z.extrapolate(k).raw for z in self.zones])

    def same_set(self, other: "Federation") -> bool:
        return self.includes(other) and other.includes(self)


def fed_subtract(a: Federation, b: Federation) -> Federation:
    return a.subtract(b)


def fed_includes(a: Federation, b: Federation) -> bool:
    return a.includes(b)
