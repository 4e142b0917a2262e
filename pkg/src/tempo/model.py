"""Networks of timed automata with bounded integer variables and channels.

A model file is line oriented.  Section headers start in column 0, their
content lines are indented, ``#`` starts a comment::

    consts
      D = 80
    clocks
      x, y
    vars
      n 0..3 = 0
    channels
      go binary
      tick broadcast
    automaton P
      loc idle
      loc busy x <= D
      init idle
      edge idle -> busy sync go! reset x do n := n + 1
      edge busy -> idle guard x >= 2 and n < 3

Constant names are substituted when the file is read.  The full grammar is in
``docs/format.md``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from tempo.dbm import Dbm, MaxConstants, atoms_for
from tempo.errors import Diagnostic, ModelError

RELATIONS = ("<=", ">=", "==", "!=", "<", ">")
KEYWORDS = {"and", "or", "not", "imply", "true", "false", "guard", "sync", "reset", "do"}
SECTIONS = ("consts", "clocks", "vars", "channels", "automaton")

# ---------------------------------------------------------------------------
# expressions


TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\[\d+\])*)"
    r"|(?P<op>:=|<=|>=|==|!=|&&|\|\||=>|->|[-+*()<>=!?,@{}\[\]])"
    r")"
)


class ParseError(Exception):
    pass


def tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r}")
        out.append(m.group(m.lastgroup))
        pos = m.end()
    return out


@dataclass(frozen=True)
class Lin:
    """Linear integer expression ``const + sum(coef * name)``."""

    const: int = 0
    terms: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def of(const: int = 0, terms: dict[str, int] | None = None) -> "Lin":
        items = tuple(sorted((k, v) for k, v in (terms or {}).items() if v))
        return Lin(const, items)

    def coeffs(self) -> dict[str, int]:
        return dict(self.terms)

    def __add__(self, other: "Lin") -> "Lin":
        t = self.coeffs()
        for k, v in other.terms:
            t[k] = t.get(k, 0) + v
        return Lin.of(self.const + other.const, t)

    def scale(self, f: int) -> "Lin":
        return Lin.of(self.const * f, {k: v * f for k, v in self.terms})

    def __sub__(self, other: "Lin") -> "Lin":
        return self + other.scale(-1)

    def names(self) -> set[str]:
        return {k for k, _ in self.terms}

    def __str__(self) -> str:
        parts = []
        for name, c in self.terms:
            if c == 1:
                parts.append(("+", name))
            elif c == -1:
                parts.append(("-", name))
            else:
                parts.append(("-" if c < 0 else "+", f"{abs(c)}*{name}"))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", str(abs(self.const))))
        first_sign, first = parts[0]
        s = ("-" if first_sign == "-" else "") + first
        for sign, p in parts[1:]:
            s += f" {sign} {p}"
        return s


class ExprParser:
    """Recursive descent over a token list; shared with the query parser."""

    def __init__(self, tokens: list[str], consts: dict[str, int] | None = None):
        self.toks = tokens
        self.pos = 0
        self.consts = consts or {}

    def peek(self, k: int = 0) -> str | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of input, expected {expected or 'more'}")
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def lin(self) -> Lin:
        e = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Lin:
        if self.peek() == "-":
            self.take()
            return self.term().scale(-1)
        e = self.factor()
        while self.peek() == "*":
            self.take()
            f = self.factor()
            if not f.terms:
                e = e.scale(f.const)
            elif not e.terms:
                e = f.scale(e.const)
            else:
                raise ParseError("non-linear product")
        return e

    def factor(self) -> Lin:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        if tok == "(":
            self.take()
            e = self.lin()
            self.take(")")
            return e
        if tok.isdigit():
            self.take()
            return Lin(int(tok))
        if TOKEN_RE.fullmatch(tok) and (tok[0].isalpha() or tok[0] == "_"):
            if tok in KEYWORDS:
                raise ParseError(f"unexpected keyword {tok!r}")
            self.take()
            if tok in self.consts:
                return Lin(self.consts[tok])
            return Lin.of(0, {tok: 1})
        raise ParseError(f"unexpected token {tok!r}")

    def comparison(self) -> tuple[Lin, str]:
        """``lin rel lin``, returned as ``(lhs - rhs, rel)``."""
        lhs = self.lin()
        rel = self.peek()
        if rel == "=":
            rel = "=="
        if rel not in RELATIONS:
            raise ParseError(f"expected a comparison, found {rel!r}")
        self.take()
        rhs = self.lin()
        return lhs - rhs, rel


FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


# ---------------------------------------------------------------------------
# model types


@dataclass(frozen=True)
class ClockAtom:
    """``x_i - x_j rel c``; ``j == 0`` is a plain clock bound."""

    i: int
    j: int
    rel: str
    const: int

    def triples(self) -> list[tuple[int, int, int]]:
        return atoms_for(self.i, self.j, self.rel, self.const)

    def render(self, clocks: Sequence[str]) -> str:
        lhs = clocks[self.i - 1] if self.i else "0"
        if self.j:
            lhs += f" - {clocks[self.j - 1]}"
        return f"{lhs} {self.rel} {self.const}"

    def clocks(self) -> tuple[int, ...]:
        return tuple(k for k in (self.i, self.j) if k)


@dataclass(frozen=True)
class DiscAtom:
    """``expr rel 0`` over discrete variables (by name)."""

    expr: Lin
    rel: str

    def holds(self, env: dict[str, int]) -> bool:
        v = self.expr.const + sum(c * env[n] for n, c in self.expr.terms)
        return compare(v, self.rel, 0)

    def render(self) -> str:
        # move the constant to the right for readability
        lhs = Lin(0, self.expr.terms)
        if not lhs.terms:
            return f"{self.expr.const} {self.rel} 0"
        return f"{lhs} {self.rel} {-self.expr.const}"


def compare(a: int, rel: str, b: int) -> bool:
    if rel == "==":
        return a == b
    if rel == "!=":
        return a != b
    if rel == "<":
        return a < b
    if rel == "<=":
        return a <= b
    if rel == ">":
        return a > b
    return a >= b


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Lin

    def render(self) -> str:
        return f"{self.var} := {self.expr}"


@dataclass(frozen=True)
class Var:
    name: str
    lo: int
    hi: int
    init: int


@dataclass(frozen=True)
class Channel:
    name: str
    kind: str  # "binary" | "broadcast"


@dataclass(frozen=True)
class Location:
    name: str
    invariant: tuple[ClockAtom, ...] = ()


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    clock_guard: tuple[ClockAtom, ...] = ()
    disc_guard: tuple[DiscAtom, ...] = ()
    sync: tuple[str, str] | None = None  # (channel, "!" or "?")
    resets: tuple[int, ...] = ()
    updates: tuple[Assign, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Automaton:
    name: str
    locations: tuple[Location, ...]
    initial: int
    edges: tuple[Edge, ...]

    def loc_index(self, name: str) -> int:
        for k, loc in enumerate(self.locations):
            if loc.name == name:
                return k
        raise KeyError(name)


@dataclass(frozen=True)
class Transition:
    """A joint move: the participating edges, in the order their updates apply."""

    parts: tuple[tuple[int, int], ...]
    channel: str | None
    guard: tuple[tuple[int, int, int], ...]
    resets: tuple[int, ...]
    target: tuple[int, ...]
    disc: tuple[int, ...]

    def label(self) -> str:
        return ",".join(f"{p}:{e}" for p, e in self.parts)


@dataclass(frozen=True, eq=False)
class Network:
    clocks: tuple[str, ...]
    vars: tuple[Var, ...]
    channels: tuple[Channel, ...]
    automata: tuple[Automaton, ...]
    consts: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})
        object.__setattr__(self, "_inv_cache", {})

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.clocks == other.clocks
            and self.vars == other.vars
            and self.channels == other.channels
            and self.automata == other.automata
            and self.consts == other.consts
        )

    def __hash__(self) -> int:
        return hash((self.clocks, self.vars, self.channels, self.automata))

    @property
    def dim(self) -> int:
        return len(self.clocks) + 1

    @property
    def const_map(self) -> dict[str, int]:
        return dict(self.consts)

    def clock_index(self, name: str) -> int:
        return self.clocks.index(name) + 1

    def var_index(self, name: str) -> int:
        for k, v in enumerate(self.vars):
            if v.name == name:
                return k
        raise KeyError(name)

    def proc_index(self, name: str) -> int:
        for k, a in enumerate(self.automata):
            if a.name == name:
                return k
        raise KeyError(name)

    def channel(self, name: str) -> Channel | None:
        for c in self.channels:
            if c.name == name:
                return c
        return None

    def initial_locs(self) -> tuple[int, ...]:
        return tuple(a.initial for a in self.automata)

    def initial_disc(self) -> tuple[int, ...]:
        return tuple(v.init for v in self.vars)

    def env(self, disc: Sequence[int]) -> dict[str, int]:
        return {v.name: x for v, x in zip(self.vars, disc)}

    def invariant(self, locs: Sequence[int]) -> tuple[tuple[int, int, int], ...]:
        key = tuple(locs)
        got = self._inv_cache.get(key)
        if got is None:
            acc = []
            for a, l in zip(self.automata, key):
                for atom in a.locations[l].invariant:
                    acc.extend(atom.triples())
            got = tuple(acc)
            self._inv_cache[key] = got
        return got

    def loc_names(self, locs: Sequence[int]) -> list[str]:
        return [a.locations[l].name for a, l in zip(self.automata, locs)]

    def transitions(self, locs: Sequence[int], disc: Sequence[int]) -> list[Transition]:
        key = (tuple(locs), tuple(disc))
        got = self._cache.get(key)
        if got is None:
            got = _joint_transitions(self, key[0], key[1])
            self._cache[key] = got
        return got

    def clear_cache(self) -> None:
        self._cache.clear()


# ---------------------------------------------------------------------------
# semantics


def _apply(net: Network, env: dict[str, int], edges: Iterable[Edge]) -> tuple[int, ...] | None:
    env = dict(env)
    for e in edges:
        for u in e.updates:
            env[u.var] = u.expr.const + sum(c * env[n] for n, c in u.expr.terms)
    out = []
    for v in net.vars:
        x = env[v.name]
        if not v.lo <= x <= v.hi:
            return None
        out.append(x)
    return tuple(out)


def _joint_transitions(net: Network, locs: tuple[int, ...], disc: tuple[int, ...]):
    env = net.env(disc)
    live: list[list[tuple[int, Edge]]] = []
    receivers: dict[str, list[tuple[int, int, Edge]]] = {}
    for p, a in enumerate(net.automata):
        mine = []
        for k, e in enumerate(a.edges):
            if e.src != locs[p] or not all(g.holds(env) for g in e.disc_guard):
                continue
            mine.append((k, e))
            if e.sync and e.sync[1] == "?":
                receivers.setdefault(e.sync[0], []).append((p, k, e))
        live.append(mine)

    out: list[Transition] = []

    def emit(parts: list[tuple[int, int, Edge]], channel: str | None) -> None:
        disc_after = _apply(net, env, (e for _, _, e in parts))
        if disc_after is None:
            return
        target = list(locs)
        guard: list[tuple[int, int, int]] = []
        resets: list[int] = []
        for p, _, e in parts:
            target[p] = e.dst
            for g in e.clock_guard:
                guard.extend(g.triples())
            for x in e.resets:
                if x not in resets:
                    resets.append(x)
        out.append(
            Transition(
                tuple((p, k) for p, k, _ in parts),
                channel,
                tuple(guard),
                tuple(resets),
                tuple(target),
                disc_after,
            )
        )

    for p, mine in enumerate(live):
        for k, e in mine:
            if e.sync is None:
                emit([(p, k, e)], None)
                continue
            ch, pol = e.sync
            if pol != "!":
                continue
            chan = net.channel(ch)
            recv = [r for r in receivers.get(ch, ()) if r[0] != p]
            if chan is not None and chan.kind == "broadcast":
                by_proc: dict[int, list[tuple[int, int, Edge]]] = {}
                for r in recv:
                    by_proc.setdefault(r[0], []).append(r)
                groups = [by_proc[q] for q in sorted(by_proc)]
                for combo in itertools.product(*groups):
                    emit([(p, k, e), *combo], ch)
            else:
                for r in recv:
                    emit([(p, k, e), r], ch)
    return out


def enabled_edges(net: Network, locs: Sequence[int], disc: Sequence[int]) -> list[Transition]:
    """Joint transitions whose discrete guards hold; clock guards are left to the caller."""
    return net.transitions(locs, disc)


def max_constants(net: Network, query=None) -> MaxConstants:
    """Largest constant each clock is compared with, in the model and the query."""
    k = [0] * net.dim

    def see(atom: ClockAtom) -> None:
        for x in atom.clocks():
            if x < len(k):
                k[x] = max(k[x], abs(atom.const))

    for a in net.automata:
        for loc in a.locations:
            for atom in loc.invariant:
                see(atom)
        for e in a.edges:
            for atom in e.clock_guard:
                see(atom)
    if query is not None:
        atoms = query.clock_atoms() if hasattr(query, "clock_atoms") else query
        for atom in atoms:
            see(atom)
    return MaxConstants(k)


# ---------------------------------------------------------------------------
# validation


def _lin_range(expr: Lin, dom: dict[str, Var]) -> tuple[int, int]:
    lo = hi = expr.const
    for n, c in expr.terms:
        v = dom[n]
        a, b = c * v.lo, c * v.hi
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi


def validate(net: Network) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def err(msg: str, line: int | None = None, severity: str = "error") -> None:
        diags.append(Diagnostic(line, msg, severity))

    def dup(kind: str, names: Iterable[str]) -> None:
        seen = set()
        for n in names:
            if n in seen:
                err(f"duplicate {kind} name {n!r}")
            seen.add(n)

    dup("clock", net.clocks)
    dup("variable", (v.name for v in net.vars))
    dup("channel", (c.name for c in net.channels))
    dup("automaton", (a.name for a in net.automata))
    dup("constant", (n for n, _ in net.consts))
    for a in net.automata:
        dup(f"location in {a.name}", (l.name for l in a.locations))

    dom = {v.name: v for v in net.vars}
    for v in net.vars:
        if v.lo > v.hi:
            err(f"variable {v.name} has empty range {v.lo}..{v.hi}")
        elif not v.lo <= v.init <= v.hi:
            err(f"initial value {v.init} of {v.name} outside {v.lo}..{v.hi}")
    for c in net.channels:
        if c.kind not in ("binary", "broadcast"):
            err(f"channel {c.name} has unknown kind {c.kind!r}")

    n = len(net.clocks)

    def check_atom(atom: ClockAtom, where: str, line: int | None) -> None:
        if not (0 <= atom.i <= n and 0 <= atom.j <= n) or atom.i == atom.j:
            err(f"clock index out of range in {where}", line)
        if atom.rel == "!=":
            err(f"clock disequality is not a zone in {where}", line)
        if atom.j == 0 and atom.const < 0:
            err(f"negative clock constant in {where}", line)

    if not net.automata:
        err("network has no automata")

    zero = Dbm.zero(net.dim)
    for a in net.automata:
        if not 0 <= a.initial < len(a.locations):
            err(f"automaton {a.name} has no valid initial location")
            continue
        for loc in a.locations:
            for atom in loc.invariant:
                check_atom(atom, f"invariant of {a.name}.{loc.name}", None)
        for e in a.edges:
            where = f"edge of {a.name}"
            if not (0 <= e.src < len(a.locations) and 0 <= e.dst < len(a.locations)):
                err(f"{where} refers to an unknown location", e.line)
                continue
            for atom in e.clock_guard:
                check_atom(atom, where, e.line)
            for g in e.disc_guard:
                for nm in g.expr.names():
                    if nm not in dom:
                        err(f"undeclared identifier {nm!r} in {where}", e.line)
            for x in e.resets:
                if not 1 <= x <= n:
                    err(f"reset of unknown clock index {x} in {where}", e.line)
            if e.sync is not None:
                ch = net.channel(e.sync[0])
                if ch is None:
                    err(f"undeclared channel {e.sync[0]!r} in {where}", e.line)
                elif e.sync[1] not in "!?" or len(e.sync[1]) != 1:
                    err(f"bad sync polarity {e.sync[1]!r} in {where}", e.line)
                elif ch.kind == "broadcast" and e.sync[1] == "?" and e.clock_guard:
                    err(f"broadcast receiver with a clock guard in {where}", e.line)
            for u in e.updates:
                if u.var not in dom:
                    err(f"undeclared identifier {u.var!r} in {where}", e.line)
                    continue
                bad = [nm for nm in u.expr.names() if nm not in dom]
                if bad:
                    err(f"undeclared identifier {bad[0]!r} in {where}", e.line)
                    continue
                lo, hi = _lin_range(u.expr, dom)
                v = dom[u.var]
                if hi < v.lo or lo > v.hi:
                    err(
                        f"update {u.render()} always leaves the domain {v.lo}..{v.hi} of {v.name}",
                        e.line,
                    )

        # location graph reachability (warning only)
        seen = {a.initial}
        todo = [a.initial]
        while todo:
            l = todo.pop()
            for e in a.edges:
                if e.src == l and 0 <= e.dst < len(a.locations) and e.dst not in seen:
                    seen.add(e.dst)
                    todo.append(e.dst)
        for k, loc in enumerate(a.locations):
            if k not in seen:
                err(f"location {a.name}.{loc.name} is unreachable", None, "warning")

    if not any(d.severity == "error" for d in diags) and net.automata:
        init = zero.constrain(net.invariant(net.initial_locs()))
        if init.is_empty():
            err("initial invariant unsatisfiable")
    return diags


# ---------------------------------------------------------------------------
# parsing


IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\[\d+\])*")
CLAUSE_RE = re.compile(r"(?<![A-Za-z0-9_\]])(guard|sync|reset|do)(?![A-Za-z0-9_\[])")


class _Ctx:
    def __init__(self):
        self.consts: dict[str, int] = {}
        self.clocks: list[str] = []
        self.vars: list[Var] = []
        self.channels: list[Channel] = []
        self.diags: list[Diagnostic] = []

    def error(self, line: int, msg: str) -> None:
        self.diags.append(Diagnostic(line, msg))


def split_conjuncts(text: str) -> list[str]:
    parts = re.split(r"\band\b|&&", text)
    return [p.strip() for p in parts if p.strip()]


def parse_constraint(
    text: str,
    clocks: Sequence[str],
    variables: Iterable[str],
    consts: dict[str, int],
) -> list[ClockAtom | DiscAtom]:
    """Parse a conjunction of clock and discrete comparisons."""
    varset = set(variables)
    out: list[ClockAtom | DiscAtom] = []
    if text.strip() in ("", "true"):
        return out
    for piece in split_conjuncts(text):
        if piece == "true":
            continue
        p = ExprParser(tokenize(piece), consts)
        diff, rel = p.comparison()
        if not p.at_end():
            raise ParseError(f"trailing input after comparison: {p.peek()!r}")
        out.append(classify(diff, rel, clocks, varset))
    return out


def classify(diff: Lin, rel: str, clocks: Sequence[str], varset: set[str]) -> ClockAtom | DiscAtom:
    names = diff.names()
    clock_names = {n for n in names if n in clocks}
    other = names - clock_names
    unknown = [n for n in other if n not in varset]
    if unknown:
        raise ParseError(f"undeclared identifier {sorted(unknown)[0]!r}")
    if not clock_names:
        return DiscAtom(diff, rel)
    if other:
        raise ParseError("clocks and variables mixed in one comparison")
    if rel == "!=":
        raise ParseError("clock disequality is not supported")
    co = diff.coeffs()
    pos = [n for n, c in co.items() if c == 1]
    neg = [n for n, c in co.items() if c == -1]
    if len(co) == 1 and len(pos) == 1:
        return ClockAtom(clocks.index(pos[0]) + 1, 0, rel, -diff.const)
    if len(co) == 1 and len(neg) == 1:
        return ClockAtom(clocks.index(neg[0]) + 1, 0, FLIP[rel], diff.const)
    if len(co) == 2 and len(pos) == 1 and len(neg) == 1:
        return ClockAtom(clocks.index(pos[0]) + 1, clocks.index(neg[0]) + 1, rel, -diff.const)
    raise ParseError("clock constraints must have the form x ~ c or x - y ~ c")


def _split_names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_model(text: str) -> Network:
    """Parse and validate a model file; raises :class:`ModelError` with diagnostics."""
    ctx = _Ctx()
    automata_raw: list[tuple[str, int, list[tuple[int, str]]]] = []
    section: str | None = None
    current: list[tuple[int, str]] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if not line[0].isspace():
            words = line.split()
            head = words[0]
            if head not in SECTIONS:
                ctx.error(lineno, f"unknown section {head!r}")
                section = None
                continue
            if head == "automaton":
                if len(words) != 2 or not IDENT_RE.fullmatch(words[1]):
                    ctx.error(lineno, "expected 'automaton <name>'")
                    section = None
                    continue
                current = []
                automata_raw.append((words[1], lineno, current))
            elif len(words) != 1:
                ctx.error(lineno, f"section header {head!r} takes no arguments")
            section = head
            continue
        body = line.strip()
        try:
            if section is None:
                ctx.error(lineno, "content outside of any section")
            elif section == "consts":
                m = re.fullmatch(r"([A-Za-z_]\w*)\s*=\s*(-?\d+)", body)
                if not m:
                    raise ParseError("expected 'NAME = integer'")
                if m.group(1) in ctx.consts:
                    raise ParseError(f"duplicate constant name {m.group(1)!r}")
                ctx.consts[m.group(1)] = int(m.group(2))
            elif section == "clocks":
                for n in _split_names(body):
                    if not IDENT_RE.fullmatch(n) or n in KEYWORDS:
                        raise ParseError(f"bad clock name {n!r}")
                    if n in ctx.clocks:
                        raise ParseError(f"duplicate clock name {n!r}")
                    ctx.clocks.append(n)
            elif section == "vars":
                m = re.fullmatch(
                    r"(\S+)\s+(-?\w+)\s*\.\.\s*(-?\w+)\s*(?:=\s*(-?\w+))?", body
                )
                if not m or not IDENT_RE.fullmatch(m.group(1)):
                    raise ParseError("expected 'name lo..hi = init'")
                lo, hi = (_const(ctx, m.group(k)) for k in (2, 3))
                init = _const(ctx, m.group(4)) if m.group(4) is not None else lo
                if any(v.name == m.group(1) for v in ctx.vars):
                    raise ParseError(f"duplicate variable name {m.group(1)!r}")
                ctx.vars.append(Var(m.group(1), lo, hi, init))
            elif section == "channels":
                words = body.split()
                if len(words) != 2 or words[1] not in ("binary", "broadcast"):
                    raise ParseError("expected 'name binary|broadcast'")
                if any(c.name == words[0] for c in ctx.channels):
                    raise ParseError(f"duplicate channel name {words[0]!r}")
                ctx.channels.append(Channel(words[0], words[1]))
            else:
                current.append((lineno, body))
        except ParseError as exc:
            ctx.error(lineno, str(exc))

    automata = [_parse_automaton(ctx, name, ln, lines) for name, ln, lines in automata_raw]
    if ctx.diags:
        raise ModelError("model has errors", ctx.diags)
    net = Network(
        tuple(ctx.clocks),
        tuple(ctx.vars),
        tuple(ctx.channels),
        tuple(a for a in automata if a is not None),
        tuple(ctx.consts.items()),
    )
    errors = [d for d in validate(net) if d.severity == "error"]
    if errors:
        raise ModelError("model has errors", errors)
    return net


def _const(ctx: _Ctx, tok: str) -> int:
    if re.fullmatch(r"-?\d+", tok):
        return int(tok)
    if tok in ctx.consts:
        return ctx.consts[tok]
    raise ParseError(f"undeclared constant {tok!r}")


def _parse_automaton(ctx: _Ctx, name: str, header_line: int, lines):
    locs: list[Location] = []
    loc_lines: dict[str, int] = {}
    init: str | None = None
    init_line = header_line
    edge_lines: list[tuple[int, str]] = []
    varnames = [v.name for v in ctx.vars]
    for lineno, body in lines:
        kw, _, rest = body.partition(" ")
        rest = rest.strip()
        try:
            if kw == "loc":
                lname, _, inv = rest.partition(" ")
                if not IDENT_RE.fullmatch(lname):
                    raise ParseError("expected 'loc <name> [invariant]'")
                if lname in loc_lines:
                    raise ParseError(f"duplicate location name {lname!r}")
                atoms = parse_constraint(inv, ctx.clocks, varnames, ctx.consts)
                if any(isinstance(a, DiscAtom) for a in atoms):
                    raise ParseError("invariants may only constrain clocks")
                loc_lines[lname] = lineno
                locs.append(Location(lname, tuple(atoms)))
            elif kw == "init":
                if init is not None:
                    raise ParseError("initial location given twice")
                init, init_line = rest, lineno
            elif kw == "edge":
                edge_lines.append((lineno, rest))
            else:
                raise ParseError(f"unknown declaration {kw!r} in automaton {name}")
        except ParseError as exc:
            ctx.error(lineno, str(exc))

    names = [l.name for l in locs]
    if init is None:
        ctx.error(header_line, f"automaton {name} has no init line")
        return None
    if init not in names:
        ctx.error(init_line, f"initial location {init!r} of {name} is not declared")
        return None
    edges = []
    for lineno, rest in edge_lines:
        try:
            edges.append(_parse_edge(ctx, names, lineno, rest))
        except ParseError as exc:
            ctx.error(lineno, str(exc))
    return Automaton(name, tuple(locs), names.index(init), tuple(edges))


def _parse_edge(ctx: _Ctx, names: list[str], lineno: int, rest: str) -> Edge:
    m = re.match(r"(\S+)\s*->\s*(\S+)\s*(.*)$", rest)
    if not m:
        raise ParseError("expected 'edge <src> -> <dst> ...'")
    src, dst, tail = m.groups()
    for l in (src, dst):
        if l not in names:
            raise ParseError(f"undeclared location {l!r}")
    pieces = CLAUSE_RE.split(tail)
    if pieces[0].strip():
        raise ParseError(f"unexpected text {pieces[0].strip()!r}")
    clauses: dict[str, str] = {}
    for kw, body in zip(pieces[1::2], pieces[2::2]):
        if kw in clauses:
            raise ParseError(f"clause {kw!r} given twice")
        clauses[kw] = body.strip()
    varnames = [v.name for v in ctx.vars]
    cg: list[ClockAtom] = []
    dg: list[DiscAtom] = []
    for atom in parse_constraint(clauses.get("guard", ""), ctx.clocks, varnames, ctx.consts):
        (cg if isinstance(atom, ClockAtom) else dg).append(atom)
    sync = None
    if "sync" in clauses:
        s = clauses["sync"].replace(" ", "")
        if len(s) < 2 or s[-1] not in "!?" or not IDENT_RE.fullmatch(s[:-1]):
            raise ParseError("expected 'sync <channel>!' or 'sync <channel>?'")
        if not any(c.name == s[:-1] for c in ctx.channels):
            raise ParseError(f"undeclared channel {s[:-1]!r}")
        sync = (s[:-1], s[-1])
    resets = []
    for n in _split_names(clauses.get("reset", "")):
        if n not in ctx.clocks:
            raise ParseError(f"undeclared clock {n!r}")
        resets.append(ctx.clocks.index(n) + 1)
    updates = []
    for a in _split_names(clauses.get("do", "")):
        am = re.fullmatch(r"(\S+?)\s*:?=\s*(.+)", a)
        if not am:
            raise ParseError(f"expected 'var := expr', found {a!r}")
        var = am.group(1)
        if var not in varnames:
            raise ParseError(f"undeclared identifier {var!r}")
        p = ExprParser(tokenize(am.group(2)), ctx.consts)
        expr = p.lin()
        if not p.at_end():
            raise ParseError(f"trailing input in update {a!r}")
        bad = [n for n in expr.names() if n not in varnames]
        if bad:
            raise ParseError(f"undeclared identifier {bad[0]!r}")
        updates.append(Assign(var, expr))
    return Edge(
        names.index(src),
        names.index(dst),
        tuple(cg),
        tuple(dg),
        sync,
        tuple(resets),
        tuple(updates),
        lineno,
    )


def serialize(net: Network) -> str:
    out: list[str] = []
    if net.consts:
        out.append("consts")
        out.extend(f"  {n} = {v}" for n, v in net.consts)
    if net.clocks:
        out.append("clocks")
        out.append("  " + ", ".join(net.clocks))
    if net.vars:
        out.append("vars")
        out.extend(f"  {v.name} {v.lo}..{v.hi} = {v.init}" for v in net.vars)
    if net.channels:
        out.append("channels")
        out.extend(f"  {c.name} {c.kind}" for c in net.channels)
    for a in net.automata:
        out.append(f"automaton {a.name}")
        for loc in a.locations:
            inv = " and ".join(x.render(net.clocks) for x in loc.invariant)
            out.append(f"  loc {loc.name}" + (f" {inv}" if inv else ""))
        out.append(f"  init {a.locations[a.initial].name}")
        for e in a.edges:
            s = f"  edge {a.locations[e.src].name} -> {a.locations[e.dst].name}"
            guard = [x.render(net.clocks) for x in e.clock_guard]
            guard += [g.render() for g in e.disc_guard]
            if guard:
                s += " guard " + " and ".join(guard)
            if e.sync:
                s += f" sync {e.sync[0]}{e.sync[1]}"
            if e.resets:
                s += " reset " + ", ".join(net.clocks[x - 1] for x in e.resets)
            if e.updates:
                s += " do " + ", ".join(u.render() for u in e.updates)
            out.append(s)
    return "\n".join(out) + "\n"
