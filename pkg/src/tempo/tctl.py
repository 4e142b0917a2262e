"""TCTL queries: syntax tree, parser, and a backward-fixpoint model checker.

Satisfaction sets map every reachable configuration ``(locs, disc)`` to a
federation over the model clocks plus one auxiliary clock ``z`` (the last
index).  ``z`` is never reset by the model; a bounded modality such as
``AF{<=c} p`` is evaluated as ``A[true U (p and z <= c)]`` on the states with
``z = 0``, after which ``z`` is released again.

The state space is the forward-reachable zone set (with extrapolation); it is
closed under successors, so the temporal fixpoints never leave it.  Runs that
block (no delay and no action possible) are not maximal runs and are ignored;
Zeno runs are not excluded.
"""

from __future__ import annotations

import re
import time
import weakref
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from tempo.dbm import INF, LE_ZERO, Dbm, Federation, MaxConstants, atoms_for
from tempo.errors import QueryError
from tempo.explorer import (
    Config,
    Stats,
    Trace,
    Verdict,
    ZoneBudget,
    concretize,
    forward_reach,
    initial_state,
    post,
    pre_delay,
    pre_transition,
)
from tempo.kernels import backend as _k
from tempo.model import (
    ClockAtom,
    DiscAtom,
    ExprParser,
    Lin,
    Network,
    ParseError,
    classify,
    max_constants,
    tokenize,
)

# value names shared with the protocol models
VALUE_NAMES = {"undefined": 0, "abort": 1, "commit": 2, "no": 1, "yes": 2}


# ---------------------------------------------------------------------------
# syntax tree


class Formula:
    def children(self) -> tuple["Formula", ...]:
        return ()

    def is_state(self) -> bool:
        return all(c.is_state() for c in self.children())

    def clock_atoms(self) -> list[ClockAtom]:
        out: list[ClockAtom] = []
        for c in self.children():
            out.extend(c.clock_atoms())
        return out

    def bounds(self) -> list[int]:
        out: list[int] = []
        for c in self.children():
            out.extend(c.bounds())
        return out

    def truth(self, net: Network, locs, disc) -> bool:
        """Value of a clock-free state formula at a configuration."""
        raise QueryError(f"{self} is not a clock-free state formula")

    @cached_property
    def _clock_free(self) -> bool:
        return self.is_state() and not self.clock_atoms()

    def clock_free(self) -> bool:
        return self._clock_free

    def sat(self, net: Network, locs, disc, dim: int) -> Federation:
        raise QueryError(f"{self} is not a state formula")


def _const_fed(value: bool, dim: int) -> Federation:
    return Federation.universe(dim) if value else Federation(dim)


@dataclass(frozen=True)
class TrueF(Formula):
    def truth(self, net, locs, disc):
        return True

    def sat(self, net, locs, disc, dim):
        return Federation.universe(dim)

    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FalseF(Formula):
    def truth(self, net, locs, disc):
        return False

    def sat(self, net, locs, disc, dim):
        return Federation(dim)

    def __str__(self):
        return "false"


@dataclass(frozen=True)
class LocAtom(Formula):
    proc: int
    loc: int
    text: str = ""

    def holds(self, locs) -> bool:
        return locs[self.proc] == self.loc

    def truth(self, net, locs, disc):
        return self.holds(locs)

    def sat(self, net, locs, disc, dim):
        return Federation.universe(dim) if self.holds(locs) else Federation(dim)

    def __str__(self):
        return self.text or f"P{self.proc + 1}@{self.loc}"


@dataclass(frozen=True)
class DiscCmp(Formula):
    atom: DiscAtom

    def holds(self, net: Network, disc) -> bool:
        return self.atom.holds(net.env(disc))

    def truth(self, net, locs, disc):
        return self.holds(net, disc)

    def sat(self, net, locs, disc, dim):
        return Federation.universe(dim) if self.holds(net, disc) else Federation(dim)

    def __str__(self):
        return self.atom.render()


@dataclass(frozen=True)
class ClockCmp(Formula):
    atom: ClockAtom
    text: str = ""

    def clock_atoms(self):
        return [self.atom]

    def sat(self, net, locs, disc, dim):
        return Federation.universe(dim).constrain(self.atom.triples())

    def __str__(self):
        return self.text or f"x{self.atom.i} - x{self.atom.j} {self.atom.rel} {self.atom.const}"


@dataclass(frozen=True)
class Not(Formula):
    f: Formula

    def children(self):
        return (self.f,)

    def truth(self, net, locs, disc):
        return not self.f.truth(net, locs, disc)

    def sat(self, net, locs, disc, dim):
        if self.clock_free():
            return _const_fed(self.truth(net, locs, disc), dim)
        return Federation.universe(dim).subtract(self.f.sat(net, locs, disc, dim))

    def __str__(self):
        return f"not ({self.f})"


@dataclass(frozen=True)
class And(Formula):
    a: Formula
    b: Formula

    def children(self):
        return (self.a, self.b)

    def truth(self, net, locs, disc):
        return self.a.truth(net, locs, disc) and self.b.truth(net, locs, disc)

    def sat(self, net, locs, disc, dim):
        if self.a.clock_free() and not self.a.truth(net, locs, disc):
            return Federation(dim)
        if self.clock_free():
            return _const_fed(self.truth(net, locs, disc), dim)
        return self.a.sat(net, locs, disc, dim).intersect(self.b.sat(net, locs, disc, dim))

    def __str__(self):
        return f"({self.a} and {self.b})"


@dataclass(frozen=True)
class Or(Formula):
    a: Formula
    b: Formula

    def children(self):
        return (self.a, self.b)

    def truth(self, net, locs, disc):
        return self.a.truth(net, locs, disc) or self.b.truth(net, locs, disc)

    def sat(self, net, locs, disc, dim):
        if self.clock_free():
            return _const_fed(self.truth(net, locs, disc), dim)
        return self.a.sat(net, locs, disc, dim).union(self.b.sat(net, locs, disc, dim))

    def __str__(self):
        return f"({self.a} or {self.b})"


@dataclass(frozen=True)
class Imply(Formula):
    a: Formula
    b: Formula

    def children(self):
        return (self.a, self.b)

    def truth(self, net, locs, disc):
        return not self.a.truth(net, locs, disc) or self.b.truth(net, locs, disc)

    def sat(self, net, locs, disc, dim):
        if self.clock_free():
            return _const_fed(self.truth(net, locs, disc), dim)
        return Or(Not(self.a), self.b).sat(net, locs, disc, dim)

    def __str__(self):
        return f"({self.a} imply {self.b})"


@dataclass(frozen=True)
class Bound:
    rel: str  # "<=" or "<"
    const: int

    def __str__(self):
        return f"{{{self.rel}{self.const}}}"


class Temporal(Formula):
    def is_state(self) -> bool:
        return False


@dataclass(frozen=True)
class EU(Temporal):
    a: Formula
    b: Formula
    bound: Bound | None = None

    def children(self):
        return (self.a, self.b)

    def bounds(self):
        return super().bounds() + ([self.bound.const] if self.bound else [])

    def __str__(self):
        return f"E[{self.a} U{self.bound or ''} {self.b}]"


@dataclass(frozen=True)
class AU(Temporal):
    a: Formula
    b: Formula
    bound: Bound | None = None

    def children(self):
        return (self.a, self.b)

    def bounds(self):
        return super().bounds() + ([self.bound.const] if self.bound else [])

    def __str__(self):
        return f"A[{self.a} U{self.bound or ''} {self.b}]"


@dataclass(frozen=True)
class EG(Temporal):
    f: Formula

    def children(self):
        return (self.f,)

    def __str__(self):
        return f"EG {self.f}"


@dataclass(frozen=True)
class EF(Temporal):
    f: Formula
    bound: Bound | None = None

    def children(self):
        return (self.f,)

    def bounds(self):
        return super().bounds() + ([self.bound.const] if self.bound else [])

    def __str__(self):
        return f"EF{self.bound or ''} {self.f}"


@dataclass(frozen=True)
class AF(Temporal):
    f: Formula
    bound: Bound | None = None

    def children(self):
        return (self.f,)

    def bounds(self):
        return super().bounds() + ([self.bound.const] if self.bound else [])

    def __str__(self):
        return f"AF{self.bound or ''} {self.f}"


@dataclass(frozen=True)
class AG(Temporal):
    f: Formula
    bound: Bound | None = None

    def children(self):
        return (self.f,)

    def bounds(self):
        return super().bounds() + ([self.bound.const] if self.bound else [])

    def __str__(self):
        return f"AG{self.bound or ''} {self.f}"


@dataclass(frozen=True)
class AuxBound(Formula):
    """``z rel c`` on the auxiliary clock; only built internally."""

    bound: Bound

    def __str__(self):
        return f"z {self.bound.rel} {self.bound.const}"


def imply_parts(f: Formula):
    if isinstance(f, Imply):
        return f.a, f.b
    return None


def negate(f: Formula) -> Formula:
    return f.f if isinstance(f, Not) else Not(f)


# ---------------------------------------------------------------------------
# parser


TEMPORAL_PREFIX = {"AG", "AF", "EF", "EG"}
LOC_INDEX_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\[(\d+)\]")


class QueryParser(ExprParser):
    def __init__(self, text: str, net: Network | None):
        consts = dict(VALUE_NAMES)
        if net is not None:
            consts.update(net.const_map)
        super().__init__(tokenize(text), consts)
        self.net = net
        self.varnames = {v.name for v in net.vars} if net is not None else None

    def parse(self) -> Formula:
        f = self.formula()
        if not self.at_end():
            raise ParseError(f"unexpected {self.peek()!r}")
        return f

    def formula(self) -> Formula:
        a = self.disjunction()
        if self.peek() in ("imply", "=>"):
            self.take()
            return Imply(a, self.formula())
        return a

    def disjunction(self) -> Formula:
        a = self.conjunction()
        while self.peek() in ("or", "||"):
            self.take()
            a = Or(a, self.conjunction())
        return a

    def conjunction(self) -> Formula:
        a = self.unary()
        while self.peek() in ("and", "&&"):
            self.take()
            a = And(a, self.unary())
        return a

    def bound(self) -> Bound | None:
        if self.peek() != "{":
            return None
        self.take("{")
        rel = self.take()
        if rel not in ("<=", "<"):
            raise ParseError("time bounds must be {<=c} or {<c}")
        tok = self.take()
        if tok.isdigit():
            c = int(tok)
        elif tok in self.consts:
            c = self.consts[tok]
        else:
            raise ParseError(f"undeclared constant {tok!r} in time bound")
        if c < 0:
            raise ParseError("time bound must be nonnegative")
        self.take("}")
        return Bound(rel, c)

    def unary(self) -> Formula:
        tok = self.peek()
        if tok in ("not", "!"):
            self.take()
            return Not(self.unary())
        if tok in TEMPORAL_PREFIX:
            self.take()
            b = self.bound()
            f = self.unary()
            if tok == "AG":
                return AG(f, b)
            if tok == "AF":
                return AF(f, b)
            if tok == "EF":
                return EF(f, b)
            if b is not None:
                raise ParseError("EG does not take a time bound")
            return EG(f)
        if tok in ("A", "E") and self.peek(1) == "[":
            self.take()
            self.take("[")
            a = self.formula()
            self.take("U")
            b = self.bound()
            c = self.formula()
            self.take("]")
            return AU(a, c, b) if tok == "A" else EU(a, c, b)
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok == "true":
            self.take()
            return TrueF()
        if tok == "false":
            self.take()
            return FalseF()
        if tok is None:
            raise ParseError("unexpected end of query")
        if self.peek(1) == "@":
            return self.location()
        start = self.pos
        try:
            diff, rel = self.comparison()
            return self.make_cmp(diff, rel, start)
        except ParseError as exc:
            self.pos = start
            if tok == "(":
                self.take("(")
                f = self.formula()
                self.take(")")
                return f
            m = LOC_INDEX_RE.fullmatch(tok)
            if m and self.net is not None and tok not in (self.varnames or ()):
                loc = self.red_location(m.group(1), int(m.group(2)))
                if loc is not None:
                    self.take()
                    return loc
            raise exc

    def make_cmp(self, diff: Lin, rel: str, start: int) -> Formula:
        text = " ".join(self.toks[start:self.pos])
        if self.net is None:
            return DiscCmp(DiscAtom(diff, rel))
        try:
            atom = classify(diff, rel, self.net.clocks, self.varnames)
        except ParseError as exc:
            raise ParseError(f"{exc} in {text!r}") from None
        if isinstance(atom, ClockAtom):
            return ClockCmp(atom, text)
        return DiscCmp(atom)

    def location(self) -> Formula:
        proc = self.take()
        self.take("@")
        loc = self.take()
        text = f"{proc}@{loc}"
        if self.net is None:
            return LocAtom(-1, -1, text)
        pi = None
        for k, a in enumerate(self.net.automata):
            if a.name == proc:
                pi = k
        if pi is None and proc[:1] == "P" and proc[1:].isdigit():
            pi = int(proc[1:]) - 1
            if not 0 <= pi < len(self.net.automata):
                pi = None
        if pi is None:
            raise ParseError(f"undeclared process {proc!r}")
        try:
            li = self.net.automata[pi].loc_index(loc)
        except KeyError:
            raise ParseError(f"undeclared location {loc!r} of {proc}") from None
        return LocAtom(pi, li, text)

    def red_location(self, name: str, index: int) -> LocAtom | None:
        pi = index - 1
        if not 0 <= pi < len(self.net.automata):
            return None
        try:
            li = self.net.automata[pi].loc_index(name)
        except KeyError:
            return None
        return LocAtom(pi, li, f"{name}[{index}]")


def parse_query(text: str, net: Network | None = None) -> Formula:
    """Parse a query; with a network, names are resolved and checked."""
    try:
        return QueryParser(text, net).parse()
    except ParseError as exc:
        raise QueryError(f"query error: {exc}") from None


# ---------------------------------------------------------------------------
# bounded modalities


def bounded_transform(f: Formula) -> tuple[Formula, Bound] | None:
    """Unbounded core of a bounded modality plus the auxiliary-clock bound.

    ``F{~c} p`` becomes ``[true U (p and z ~ c)]`` evaluated where ``z = 0``;
    the caller releases ``z`` afterwards.
    """
    if isinstance(f, (EU, AU)) and f.bound is not None:
        core = type(f)(f.a, And(f.b, AuxBound(f.bound)))
        return core, f.bound
    if isinstance(f, (EF, AF)) and f.bound is not None:
        cls = EU if isinstance(f, EF) else AU
        return cls(TrueF(), And(f.f, AuxBound(f.bound))), f.bound
    return None


# ---------------------------------------------------------------------------
# checker


SatSet = dict  # Config -> Federation


class FedPredicate:
    """Adapter turning a satisfaction set into an explorer target."""

    def __init__(self, sets: SatSet, dim: int, atoms: list[ClockAtom]):
        self.sets = sets
        self.dim = dim
        self.atoms = atoms

    def clock_atoms(self):
        return self.atoms

    def sat(self, net, locs, disc, dim):
        fed = self.sets.get((tuple(locs), tuple(disc)))
        if fed is None:
            return Federation(dim)
        if dim == self.dim:
            return fed
        return project(fed, dim)


def project(fed: Federation, dim: int) -> Federation:
    """Drop trailing clocks (existential projection of canonical zones)."""
    src = fed.dim
    out = []
    for r in fed.raws:
        flat = _k.unpack(r, src)
        vals = [flat[i * src + j] for i in range(dim) for j in range(dim)]
        out.append(_k.pack(vals, dim))
    return Federation(dim, out)


def lift(raw, src: int, dim: int):
    """Add unconstrained clocks at the end of a canonical zone."""
    flat = _k.unpack(raw, src)
    vals = [INF] * (dim * dim)
    for i in range(src):
        for j in range(src):
            vals[i * dim + j] = flat[i * src + j]
    for x in range(src, dim):
        vals[x * dim + x] = LE_ZERO
        vals[x] = LE_ZERO
        for i in range(1, src):
            vals[i * dim + x] = flat[i * src]
    return _k.pack(vals, dim)


class Checker:
    """Evaluates formulas on one network; satisfaction sets are memoized."""

    def __init__(self, net: Network, formula: Formula | None = None, extra: Iterable[ClockAtom] = ()):
        self.net = net
        self.base = net.dim
        self.dim = net.dim + 1
        self.z = net.dim
        self.stats = Stats()
        self.budget = ZoneBudget(self.dim)
        atoms = list(extra) + (formula.clock_atoms() if formula is not None else [])
        self.k = max_constants(net, atoms)
        self.memo: dict[Formula, SatSet] = {}
        self._explore()

    # state space

    def _explore(self) -> None:
        net, d = self.net, self.base
        s0 = initial_state(net)
        k = self.k.values
        z0 = _k.extrapolate(s0.zone.raw, d, k)
        self.start: Config = s0.config
        passed: dict[Config, list] = {self.start: [z0]}
        queue = deque([(self.start, z0)])
        edges: dict[Config, list] = {}
        while queue:
            c, raw = queue.popleft()
            if raw not in passed[c]:
                continue  # subsumed after it was queued
            self.stats.states_explored += 1
            for t in net.transitions(*c):
                r = post(net, raw, t, d)
                if r is None:
                    continue
                r = _k.extrapolate(r, d, k)
                nc = (t.target, t.disc)
                bucket = passed.setdefault(nc, [])
                if any(_k.includes(o, r, d) for o in bucket):
                    continue
                bucket[:] = [o for o in bucket if not _k.includes(r, o, d)]
                bucket.append(r)
                self.budget.charge()
                queue.append((nc, r))
        for c in passed:
            edges[c] = [
                (t, (t.target, t.disc))
                for t in net.transitions(*c)
                if (t.target, t.disc) in passed
            ]
        self.configs = list(passed)
        self.edges = edges
        self.preds: dict[Config, list] = {c: [] for c in self.configs}
        for c, outs in edges.items():
            for t, nc in outs:
                self.preds[nc].append((t, c))
        self.univ = {
            c: Federation(self.dim, [lift(r, d, self.dim) for r in rs]) for c, rs in passed.items()
        }
        self.stats.zones_stored = sum(len(f) for f in self.univ.values())
        self.explored = self.stats.states_explored
        self.reach_zones = self.stats.zones_stored

    def empty(self) -> Federation:
        return Federation(self.dim)

    def get(self, s: SatSet, c: Config) -> Federation:
        return s.get(c) or self.empty()

    # evaluation

    def sat(self, f: Formula) -> SatSet:
        got = self.memo.get(f)
        if got is None:
            got = self._eval(f)
            self.memo[f] = got
            self.stats.zones_stored = max(
                self.stats.zones_stored, sum(len(x) for x in got.values())
            )
        return got

    def _eval(self, f: Formula) -> SatSet:
        bt = bounded_transform(f)
        if bt is not None:
            core, _ = bt
            inner = self.sat(core)
            zero_z = [(self.z, 0, LE_ZERO)]
            out = {}
            for c in self.configs:
                fed = self.get(inner, c).constrain(zero_z).free(self.z)
                fed = fed.intersect(self.univ[c])
                if fed:
                    out[c] = fed
            return out
        if isinstance(f, TrueF):
            return dict(self.univ)
        if isinstance(f, FalseF):
            return {}
        if isinstance(f, LocAtom):
            return {c: u for c, u in self.univ.items() if f.holds(c[0])}
        if isinstance(f, DiscCmp):
            return {c: u for c, u in self.univ.items() if f.holds(self.net, c[1])}
        if isinstance(f, (ClockCmp, AuxBound)):
            if isinstance(f, ClockCmp):
                atoms = f.atom.triples()
            else:
                atoms = atoms_for(self.z, 0, f.bound.rel, f.bound.const)
            out = {}
            for c, u in self.univ.items():
                fed = u.constrain(atoms)
                if fed:
                    out[c] = fed
            return out
        if isinstance(f, Not):
            inner = self.sat(f.f)
            out = {}
            for c, u in self.univ.items():
                fed = u.subtract(inner[c]) if c in inner else u
                if fed:
                    out[c] = fed
            return out
        if isinstance(f, And):
            a, b = self.sat(f.a), self.sat(f.b)
            out = {}
            for c in a:
                if c in b:
                    fed = a[c].intersect(b[c])
                    if fed:
                        out[c] = fed
            return out
        if isinstance(f, Or):
            a, b = self.sat(f.a), self.sat(f.b)
            out = dict(a)
            for c, fed in b.items():
                out[c] = out[c].union(fed) if c in out else fed
            return out
        if isinstance(f, Imply):
            return self.sat(Or(Not(f.a), f.b))
        if isinstance(f, EF):
            return self.sat(EU(TrueF(), f.f))
        if isinstance(f, AF):
            return self.sat(AU(TrueF(), f.f))
        if isinstance(f, AG):
            if f.bound is not None:
                return self.sat(Not(EF(Not(f.f), f.bound)))
            return self.sat(Not(EF(Not(f.f))))
        if isinstance(f, EU):
            return self._eu(self.sat(f.a), self.sat(f.b))
        if isinstance(f, AU):
            na, nb = Not(f.a), Not(f.b)
            return self.sat(Not(Or(EU(nb, And(na, nb)), EG(nb))))
        if isinstance(f, EG):
            return self._eg(self.sat(f.f))
        raise QueryError(f"cannot evaluate {f}")

    # predecessor operators

    def tpre(self, g: Federation, bad: Federation, c: Config) -> Federation:
        """States that can delay into ``g`` without touching ``bad`` on the way."""
        net, d = self.net, self.dim
        if not g:
            return g
        if not bad:
            return pre_delay(net, g, c[0]).intersect(self.univ[c])
        bad_down = [_k.down(b, d) for b in bad.raws]
        out = []
        for gr in g.raws:
            acc: Federation | None = None
            gdown = Federation(d, [_k.down(gr, d)])
            for b, bd in zip(bad.raws, bad_down):
                if not _k.intersects(gdown.raws[0], b, d):
                    continue  # b is never on the way to gr
                part = gdown.subtract(Federation(d, [bd]))
                meet = _k.intersect(gr, bd, d)
                if meet is not None:
                    early = Federation(d, _k.subtract(meet, b, d)).down()
                    part = part.union(early)
                acc = part if acc is None else acc.intersect(part)
                if not acc:
                    break
            if acc is None:
                acc = gdown
            out.extend(acc.raws)
        return Federation(d, out).constrain(net.invariant(c[0])).intersect(self.univ[c])

    def pre_action(self, x: Federation, t, c: Config) -> Federation:
        return pre_transition(self.net, x, t, c[0])

    def _eu(self, s1: SatSet, s2: SatSet) -> SatSet:
        bad = {}
        for c, u in self.univ.items():
            good = self.get(s1, c).union(self.get(s2, c))
            bad[c] = u.subtract(good)
        x: SatSet = {}
        work: deque = deque()

        def add(c: Config, fed: Federation) -> None:
            if not fed:
                return
            old = x.get(c)
            new = fed if old is None else fed.subtract(old)
            if not new:
                return
            x[c] = new if old is None else old.union(new)
            self.budget.charge(len(new))
            work.append((c, new))

        for c in self.configs:
            if c in s2:
                add(c, self.tpre(s2[c], bad[c], c))
        while work:
            c2, delta = work.popleft()
            self.stats.states_explored += 1
            for t, c in self.preds[c2]:
                s1c = s1.get(c)
                if not s1c:
                    continue
                p = self.pre_action(delta, t, c).intersect(s1c)
                if p:
                    add(c, self.tpre(p, bad[c], c))
        return x

    def forever(self, s: Federation, c: Config) -> Federation:
        """Points of ``s`` from which time can pass forever without leaving ``s``."""
        if not s:
            return s
        for i, j, b in self.net.invariant(c[0]):
            if j == 0 and b != INF:
                return self.empty()
        outside = Federation.universe(self.dim).subtract(s)
        return s.subtract(outside.down())

    def _eg(self, s: SatSet) -> SatSet:
        y: SatSet = {c: f for c, f in s.items() if f}
        forever = {c: self.forever(f, c) for c, f in y.items()}
        bad = {c: self.univ[c].subtract(y[c]) for c in y}
        work = deque(y)
        queued = set(y)
        while work:
            c = work.popleft()
            queued.discard(c)
            self.stats.states_explored += 1
            cur = y.get(c)
            if not cur:
                continue
            acts = []
            for t, c2 in self.edges[c]:
                target = y.get(c2)
                if target:
                    acts.extend(self.pre_action(target, t, c).raws)
            step = Federation(self.dim, acts).intersect(s[c])
            new = forever[c].union(self.tpre(step, bad[c], c)).intersect(s[c])
            if new.includes(cur):
                continue
            if new:
                y[c] = new
            else:
                del y[c]
            for _, pc in self.preds[c]:
                if pc in y and pc not in queued:
                    queued.add(pc)
                    work.append(pc)
        return y

    def holds_initially(self, s: SatSet) -> bool:
        fed = s.get(self.start)
        if not fed:
            return False
        return bool(fed.intersect_zone(Dbm.zero(self.dim)))

    # witnesses

    def eg_extension(self, s: SatSet, c0: Config, start: Federation):
        """Symbolic run inside ``s`` from ``start`` to a point that can idle in ``s`` forever.

        Each delay stays inside a single zone of ``s``; returns concretizer items
        or None.
        """
        net, d = self.net, self.dim
        forever = {}

        def fv(c):
            if c not in forever:
                forever[c] = self.forever(self.get(s, c), c)
            return forever[c]

        nodes = []
        queue: deque = deque()
        passed: dict = {}

        def push(c, raw, j, parent, t):
            key = (c, j)
            bucket = passed.setdefault(key, [])
            if any(_k.includes(o, raw, d) for o in bucket):
                return None
            bucket.append(raw)
            nodes.append((c, raw, j, parent, t))
            queue.append(len(nodes) - 1)
            return len(nodes) - 1

        sz0 = self.get(s, c0).raws
        for j, zr in enumerate(sz0):
            for sr in start.raws:
                r = _k.intersect(sr, zr, d)
                if r is not None:
                    r = _k.intersect(_k.up(r, d), zr, d)
                    push(c0, r, j, -1, None)
        goal = None
        while queue:
            idx = queue.popleft()
            c, raw, j, _, _ = nodes[idx]
            if any(_k.intersects(raw, f, d) for f in fv(c).raws):
                goal = idx
                break
            for t, c2 in self.edges[c]:
                r = _k.constrain_all(raw, d, t.guard)
                if r is None:
                    continue
                for x in t.resets:
                    r = _k.reset(r, d, x)
                r = _k.constrain_all(r, d, net.invariant(c2[0]))
                if r is None:
                    continue
                for j2, zr in enumerate(self.get(s, c2).raws):
                    q = _k.intersect(r, zr, d)
                    if q is not None:
                        q = _k.intersect(_k.up(q, d), zr, d)
                        push(c2, q, j2, idx, t)
        if goal is None:
            return None
        chain = []
        i = goal
        while i >= 0:
            chain.append(nodes[i])
            i = nodes[i][3]
        chain.reverse()
        items: list[tuple] = []
        for n, (c, raw, j, _, t) in enumerate(chain):
            zone = Federation(d, [self.get(s, c).raws[j]])
            if t is not None:
                items.append(("fire", t, chain[n - 1][0][0]))
            items.append(("visit", zone))
            items.append(("delay", c[0]))
            items.append(("visit", zone))
        items.append(("visit", fv(chain[-1][0])))
        return items

    def witness_for(self, f: Formula) -> Trace | None:
        """Counterexample for an invalid AG / AF style query, when one is cheap to build."""
        net = self.net
        prefix_target: SatSet | None = None
        body = None
        if isinstance(f, AG) and f.bound is None:
            prefix_target = self.sat(Not(f.f))
            body = f.f
        elif isinstance(f, AF) and f.bound is None:
            prefix_target = None
            body = f
        else:
            return None
        ext_set = None
        if body is not None:
            if isinstance(body, AF) and body.bound is None:
                ext_set = self.sat(EG(Not(body.f)))
            else:
                parts = imply_parts(body)
                if parts and isinstance(parts[1], AF) and parts[1].bound is None:
                    ext_set = self.sat(EG(Not(parts[1].f)))
        items: list[tuple] = []
        if prefix_target is not None:
            pred = FedPredicate(prefix_target, self.dim, f.clock_atoms())
            v = forward_reach(net, pred, witness=False)
            if v.status != "invalid":
                return None
            path = v.path
            locs = net.initial_locs()
            for t in path:
                items.append(("delay", locs))
                items.append(("fire", t, locs))
                locs = t.target
            c_hit = (path[-1].target, path[-1].disc) if path else self.start
            items.append(("delay", c_hit[0]))
            hit_set = self.get(prefix_target, c_hit)
            items.append(("visit", hit_set))
        else:
            c_hit = self.start
            hit_set = Federation(self.dim, [Dbm.zero(self.dim).raw])
            items.append(("visit", hit_set))
        if ext_set is not None:
            ext = self.eg_extension(ext_set, c_hit, self._reachable_part(items, hit_set))
            if ext is not None:
                items.extend(ext)
        return concretize(net, items, self.dim)

    def _reachable_part(self, items, hit_set: Federation) -> Federation:
        """Forward image of the prefix, intersected with the hit set."""
        net, d = self.net, self.dim
        cur = Federation(d, [Dbm.zero(d).raw])
        for it in items:
            if it[0] == "delay":
                cur = cur.up().constrain(net.invariant(it[1]))
            elif it[0] == "fire":
                t = it[1]
                raws = []
                for r in cur.raws:
                    r = _k.constrain_all(r, d, t.guard)
                    if r is None:
                        continue
                    for x in t.resets:
                        r = _k.reset(r, d, x)
                    r = _k.constrain_all(r, d, net.invariant(t.target))
                    if r is not None:
                        raws.append(r)
                cur = Federation(d, raws)
            else:
                cur = cur.intersect(it[1])
        return cur.intersect(hit_set)


def is_reachability(f: Formula) -> tuple[str, Formula] | None:
    """``("AG", p)`` or ``("EF", p)`` when the query is a plain invariant or reachability check."""
    if isinstance(f, AG) and f.bound is None and f.f.is_state():
        return "AG", f.f
    if isinstance(f, EF) and f.bound is None and f.f.is_state():
        return "EF", f.f
    if isinstance(f, Not) and isinstance(f.f, EF) and f.f.bound is None and f.f.f.is_state():
        return "AG", Not(f.f.f)
    return None


def check(net: Network, f: Formula | str, *, engine: str = "auto", witness: bool = True) -> Verdict:
    """Model-check ``f``; ``valid`` iff the initial state satisfies it.

    ``engine="auto"`` answers plain invariants and reachability questions by
    forward search; ``"fixpoint"`` always uses the backward fixpoints.
    """
    if isinstance(f, str):
        f = parse_query(f, net)
    t0 = time.perf_counter()
    red = is_reachability(f) if engine == "auto" else None
    if red is not None:
        kind, p = red
        target = Not(p) if kind == "AG" else p
        v = forward_reach(net, target, witness=witness)
        if kind == "EF":
            # the trace, if any, now shows how the target is reached
            v.status = "valid" if v.status == "invalid" else "invalid"
        v.stats.wall_time = time.perf_counter() - t0
        return v
    chk = checker_for(net, f)
    s = chk.sat(f)
    status = "valid" if chk.holds_initially(s) else "invalid"
    trace = None
    if status == "invalid" and witness:
        trace = chk.witness_for(f)
    stats = Stats(
        states_explored=chk.explored,
        zones_stored=chk.reach_zones + sum(len(x) for x in s.values()),
        wall_time=time.perf_counter() - t0,
    )
    return Verdict(status, trace, stats)


_CHECKERS: "weakref.WeakKeyDictionary[Network, tuple[MaxConstants, Checker]]" = (
    weakref.WeakKeyDictionary()
)


def checker_for(net: Network, f: Formula) -> Checker:
    """Checker for ``net`` whose state space covers the constants of ``f``.

    The last one built per network is kept, so a batch of queries on one model
    explores it once and shares memoized subformulas.
    """
    k = max_constants(net, f.clock_atoms())
    got = _CHECKERS.get(net)
    if got is not None and got[0] == k:
        return got[1]
    chk = Checker(net, f)
    _CHECKERS[net] = (k, chk)
    return chk
