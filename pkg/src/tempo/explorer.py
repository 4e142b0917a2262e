"""Zone-graph exploration, reachability in both directions, and concrete traces.

Target and error sets are *state predicates*: any object with
``sat(net, locs, disc, dim) -> Federation`` (the set of valuations at that
configuration satisfying it) and ``clock_atoms()`` (the clock comparisons it
mentions, so extrapolation can take their constants into account).  Formulas
without temporal operators from :mod:`tempo.tctl` qualify.
"""

from __future__ import annotations

import os
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from tempo.dbm import INF, Dbm, Federation, MaxConstants
from tempo.errors import MemoryLimitExceeded, ModelError
from tempo.kernels import backend as _k
from tempo.model import Network, Transition, max_constants

Config = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class SymbolicState:
    locs: tuple[int, ...]
    disc: tuple[int, ...]
    zone: Dbm

    @property
    def config(self) -> Config:
        return (self.locs, self.disc)


@dataclass
class Stats:
    states_explored: int = 0
    zones_stored: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "states_explored": self.states_explored,
            "zones_stored": self.zones_stored,
            "wall_time_ms": round(self.wall_time * 1000, 3),
        }


@dataclass
class Trace:
    """Delays and joint moves from the initial configuration.

    ``events`` holds ``("delay", Fraction)`` and ``("fire", parts)`` items,
    where ``parts`` lists ``(process, edge index)`` pairs in update order.
    """

    events: list[tuple[str, object]] = field(default_factory=list)
    final_locs: tuple[str, ...] = ()
    final_disc: tuple[tuple[str, int], ...] = ()

    def fires(self) -> list[tuple[tuple[int, int], ...]]:
        return [e[1] for e in self.events if e[0] == "fire"]

    def dumps(self) -> str:
        out = []
        for kind, val in self.events:
            if kind == "delay":
                out.append(f"delay {val}")
            else:
                out.append("fire " + ",".join(f"{p}:{e}" for p, e in val))
        disc = ",".join(f"{n}={v}" for n, v in self.final_disc)
        out.append(f"state {','.join(self.final_locs)} {disc}".rstrip())
        return "\n".join(out) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Trace":
        t = cls()
        seen_state = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if seen_state:
                raise ValueError(f"line {lineno}: content after the state line")
            kw, _, rest = line.partition(" ")
            rest = rest.strip()
            try:
                if kw == "delay":
                    t.events.append(("delay", Fraction(rest)))
                elif kw == "fire":
                    parts = []
                    for item in rest.split(","):
                        p, e = item.split(":")
                        parts.append((int(p), int(e)))
                    t.events.append(("fire", tuple(parts)))
                elif kw == "state":
                    locs, _, disc = rest.partition(" ")
                    t.final_locs = tuple(x for x in locs.split(",") if x)
                    pairs = []
                    for item in disc.split(","):
                        if item.strip():
                            n, v = item.split("=")
                            pairs.append((n.strip(), int(v)))
                    t.final_disc = tuple(pairs)
                    seen_state = True
                else:
                    raise ValueError(f"unknown trace line {kw!r}")
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return t


@dataclass
class Verdict:
    status: str  # "valid" | "invalid" | "unknown"
    witness: Trace | None = None
    stats: Stats = field(default_factory=Stats)
    note: str = ""
    path: list | None = field(default=None, repr=False)  # joint transitions to the hit

    def as_dict(self) -> dict:
        return {"status": self.status, **self.stats.as_dict()}


@dataclass
class ReplayResult:
    ok: bool
    step: int | None = None
    message: str = ""
    locs: tuple[int, ...] = ()
    disc: tuple[int, ...] = ()
    valuation: tuple[Fraction, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# memory cap


def memory_limit_zones(dim: int) -> int | None:
    raw = os.environ.get("TEMPO_MEM_LIMIT_MB")
    if not raw:
        return None
    try:
        mb = float(raw)
    except ValueError:
        return None
    per_zone = dim * dim * 8 + 96
    return max(1, int(mb * 1024 * 1024 / per_zone))


class ZoneBudget:
    def __init__(self, dim: int):
        self.limit = memory_limit_zones(dim)
        self.count = 0

    def charge(self, n: int = 1) -> None:
        self.count += n
        if self.limit is not None and self.count > self.limit:
            raise MemoryLimitExceeded(
                f"zone storage exceeded TEMPO_MEM_LIMIT_MB ({self.limit} zones)"
            )


# ---------------------------------------------------------------------------
# symbolic semantics


def initial_state(net: Network) -> SymbolicState:
    inv = net.invariant(net.initial_locs())
    z = Dbm.zero(net.dim).constrain(inv)
    if z.is_empty():
        raise ModelError("initial invariant unsatisfiable")
    return SymbolicState(net.initial_locs(), net.initial_disc(), z.up().constrain(inv))


def post(net: Network, raw, t: Transition, dim: int):
    """Exact successor zone (delay-closed) of ``raw`` under ``t``, or None."""
    r = _k.constrain_all(raw, dim, t.guard)
    if r is None:
        return None
    for x in t.resets:
        r = _k.reset(r, dim, x)
    inv = net.invariant(t.target)
    r = _k.constrain_all(r, dim, inv)
    if r is None:
        return None
    return _k.constrain_all(_k.up(r, dim), dim, inv)


def successors(
    net: Network, s: SymbolicState, k: MaxConstants | None = None
) -> list[tuple[Transition, SymbolicState]]:
    out = []
    d = net.dim
    for t in net.transitions(s.locs, s.disc):
        r = post(net, s.zone.raw, t, d)
        if r is None:
            continue
        z = Dbm(d, r)
        if k is not None:
            z = z.extrapolate(k)
        out.append((t, SymbolicState(t.target, t.disc, z)))
    return out


def pre_transition(net: Network, fed: Federation, t: Transition, src_locs) -> Federation:
    """Valuations before ``t`` (source invariant and guard hold) whose image lies in ``fed``."""
    d = fed.dim
    resets = t.resets
    src_inv = net.invariant(src_locs)
    out = []
    for r in fed.raws:
        for x in resets:
            r = _k.constrain(r, d, x, 0, 1)
            if r is None:
                break
            r = _k.free(r, d, x)
        if r is None:
            continue
        r = _k.constrain_all(r, d, t.guard)
        if r is None:
            continue
        r = _k.constrain_all(r, d, src_inv)
        if r is not None:
            out.append(r)
    return Federation(d, out)


def pre_delay(net: Network, fed: Federation, locs) -> Federation:
    d = fed.dim
    inv = net.invariant(locs)
    out = []
    for r in fed.raws:
        r = _k.constrain_all(_k.down(r, d), d, inv)
        if r is not None:
            out.append(r)
    return Federation(d, out)


# ---------------------------------------------------------------------------
# forward reachability


def forward_reach(
    net: Network,
    target,
    *,
    subsumption: bool = True,
    extrapolation: bool = True,
    witness: bool = True,
) -> Verdict:
    """Breadth-first zone-graph search for a state satisfying ``target``."""
    t0 = time.perf_counter()
    stats = Stats()
    d = net.dim
    k = max_constants(net, target) if extrapolation else None
    budget = ZoneBudget(d)
    s0 = initial_state(net)
    z0 = s0.zone.extrapolate(k) if k is not None else s0.zone
    passed: dict[Config, list] = {s0.config: [z0.raw]}
    budget.charge()
    nodes: list[tuple[SymbolicState, int, Transition | None]] = [
        (SymbolicState(s0.locs, s0.disc, z0), -1, None)
    ]
    queue = deque([0])
    hit = None

    target_at: dict[Config, tuple] = {}

    def hits(locs, disc, raw) -> bool:
        key = (locs, disc)
        raws = target_at.get(key)
        if raws is None:
            raws = target_at[key] = target.sat(net, locs, disc, d).raws
        return any(_k.intersects(raw, r, d) for r in raws)

    if hits(s0.locs, s0.disc, s0.zone.raw):
        hit = 0
    while queue and hit is None:
        idx = queue.popleft()
        s = nodes[idx][0]
        stats.states_explored += 1
        for t in net.transitions(s.locs, s.disc):
            r = post(net, s.zone.raw, t, d)
            if r is None:
                continue
            if hits(t.target, t.disc, r):
                nodes.append((SymbolicState(t.target, t.disc, Dbm(d, r)), idx, t))
                hit = len(nodes) - 1
                break
            if k is not None:
                r = _k.extrapolate(r, d, k.values)
            key = (t.target, t.disc)
            bucket = passed.setdefault(key, [])
            if subsumption:
                if any(_k.includes(o, r, d) for o in bucket):
                    continue
                kept = [o for o in bucket if not _k.includes(r, o, d)]
                budget.count -= len(bucket) - len(kept)
                bucket[:] = kept
            elif r in bucket:
                continue
            bucket.append(r)
            budget.charge()
            nodes.append((SymbolicState(t.target, t.disc, Dbm(d, r)), idx, t))
            queue.append(len(nodes) - 1)

    stats.zones_stored = sum(len(b) for b in passed.values())
    if hit is None:
        stats.wall_time = time.perf_counter() - t0
        return Verdict("valid", None, stats)
    path: list[Transition] = []
    j = hit
    while nodes[j][1] >= 0:
        path.append(nodes[j][2])
        j = nodes[j][1]
    path.reverse()
    trace = None
    if witness:
        last = nodes[hit][0]
        goal = target.sat(net, last.locs, last.disc, d)
        trace = witness_along(net, path, goal)
    stats.wall_time = time.perf_counter() - t0
    return Verdict("invalid", trace, stats, path=path)


def witness_along(net: Network, path: Sequence[Transition], goal: Federation) -> Trace | None:
    """Concrete trace following ``path`` and ending (after a delay) inside ``goal``."""
    items: list[tuple] = []
    locs = net.initial_locs()
    for t in path:
        items.append(("delay", locs))
        items.append(("fire", t, locs))
        locs = t.target
    items.append(("delay", locs))
    items.append(("visit", goal))
    return concretize(net, items)


# ---------------------------------------------------------------------------
# concretization


def _point_ok(raw, d: int, v: Sequence[Fraction], skip_upper: bool = False) -> bool:
    """Diagonal constraints of a zone hold at ``v`` (reference entries excluded)."""
    for i in range(1, d):
        for j in range(1, d):
            if i == j:
                continue
            b = _k.get(raw, d, i, j)
            if b == INF:
                continue
            c = b >> 1
            diff = v[i] - v[j]
            if diff > c or (diff == c and not b & 1):
                return False
    return True


def delay_window(raw, d: int, v: Sequence[Fraction]):
    """Interval of delays ``t >= 0`` with ``v + t`` in the zone.

    Returns ``(lo, lo_strict, hi, hi_strict)`` with ``hi = None`` for no upper
    bound, or None when the interval is empty.
    """
    if not _point_ok(raw, d, v):
        return None
    lo, lo_strict = Fraction(0), False
    hi, hi_strict = None, False
    for i in range(1, d):
        b = _k.get(raw, d, 0, i)  # -x_i <= c  ->  t >= -c - v_i
        if b != INF:
            cand = Fraction(-(b >> 1)) - v[i]
            strict = not b & 1
            if cand > lo or (cand == lo and strict and not lo_strict):
                lo, lo_strict = cand, strict
        b = _k.get(raw, d, i, 0)  # x_i <= c  ->  t <= c - v_i
        if b != INF:
            cand = Fraction(b >> 1) - v[i]
            strict = not b & 1
            if hi is None or cand < hi or (cand == hi and strict):
                hi, hi_strict = cand, strict
    if hi is not None:
        if hi < lo or (hi == lo and (lo_strict or hi_strict)):
            return None
    return lo, lo_strict, hi, hi_strict


def pick_delay(window) -> Fraction:
    lo, lo_strict, hi, _ = window
    if not lo_strict:
        return lo
    step = Fraction(1, 2)
    if hi is not None:
        step = min(step, (hi - lo) / 2)
    return lo + step


def _earliest(fed: Federation, v: Sequence[Fraction]) -> Fraction | None:
    best = None
    best_key = None
    for raw in fed.raws:
        w = delay_window(raw, fed.dim, v)
        if w is None:
            continue
        key = (w[0], w[1])
        if best_key is None or key < best_key:
            best_key, best = key, pick_delay(w)
    return best


def concretize(net: Network, items: list[tuple], dim: int | None = None) -> Trace | None:
    """Turn a symbolic run into a concrete trace.

    ``items`` is a sequence of ``("delay", locs)``, ``("fire", transition,
    source_locs)`` and ``("visit", federation)`` steps starting from the
    initial configuration.  Valid sets are computed backwards; delays are then
    chosen forwards, always the smallest one allowed.
    """
    if dim is None:
        dim = net.dim
        for it in items:
            if it[0] == "visit":
                dim = it[1].dim
                break
    universe = Federation.universe(dim)
    sets: list[Federation] = [None] * (len(items) + 1)  # sets[i]: valid before item i
    after: dict[int, Federation] = {}  # delay endpoints, inside the invariant
    cur = universe
    sets[len(items)] = cur
    for i in range(len(items) - 1, -1, -1):
        it = items[i]
        if it[0] == "visit":
            cur = cur.intersect(it[1])
        elif it[0] == "delay":
            after[i] = cur.constrain(net.invariant(it[1]))
            cur = pre_delay(net, after[i], it[1])
        else:
            cur = pre_transition(net, cur, it[1], it[2])
        sets[i] = cur
        if cur.is_empty():
            return None
    v = [Fraction(0)] * dim
    if not sets[0].contains(v[1:]):
        return None
    events: list[tuple[str, object]] = []
    locs, disc = net.initial_locs(), net.initial_disc()
    for i, it in enumerate(items):
        if it[0] == "delay":
            t = _earliest(after[i], v)
            if t is None:
                return None
            if t:
                v = [v[0]] + [x + t for x in v[1:]]
                if events and events[-1][0] == "delay":
                    events[-1] = ("delay", events[-1][1] + t)
                else:
                    events.append(("delay", t))
        elif it[0] == "fire":
            tr = it[1]
            for x in tr.resets:
                v[x] = Fraction(0)
            events.append(("fire", tr.parts))
            locs, disc = tr.target, tr.disc
    names = tuple(net.loc_names(locs))
    return Trace(events, names, tuple((var.name, x) for var, x in zip(net.vars, disc)))


# ---------------------------------------------------------------------------
# backward reachability


def config_graph(net: Network) -> tuple[list[Config], dict[Config, list[tuple[Transition, Config]]]]:
    """Untimed forward skeleton: configurations reachable when clocks are ignored."""
    start = (net.initial_locs(), net.initial_disc())
    order = [start]
    succ: dict[Config, list[tuple[Transition, Config]]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        out = []
        for t in net.transitions(*c):
            nc = (t.target, t.disc)
            out.append((t, nc))
            if nc not in seen:
                seen.add(nc)
                order.append(nc)
                queue.append(nc)
        succ[c] = out
    return order, succ


def backward_reach(net: Network, error) -> Verdict:
    """Least fixpoint of time and action predecessors of ``error``.

    Status only.  The fixpoint is restricted to configurations of the untimed
    skeleton; zones are never extrapolated, and new zones are kept only when
    they add points not already covered.
    """
    t0 = time.perf_counter()
    stats = Stats()
    d = net.dim
    budget = ZoneBudget(d)
    order, succ = config_graph(net)
    preds: dict[Config, list[tuple[Transition, Config]]] = {c: [] for c in order}
    for c, outs in succ.items():
        for t, nc in outs:
            preds[nc].append((t, c))
    reached: dict[Config, Federation] = {}
    work: deque[tuple[Config, Federation]] = deque()

    def add(c: Config, fed: Federation) -> None:
        # keep whole zones that add points; storing the difference instead
        # would fragment every zone along the facets of the old ones
        old = reached.get(c)
        if old is None:
            fresh = list(fed.raws)
        else:
            fresh = [r for r in fed.raws if not old.includes(Federation._trusted(d, [r]))]
        if not fresh:
            return
        new = Federation(d, fresh)
        reached[c] = new if old is None else old.union(new)
        budget.charge(len(new))
        work.append((c, new))

    for c in order:
        inv = net.invariant(c[0])
        bad = error.sat(net, c[0], c[1], d).constrain(inv)
        if not bad.is_empty():
            add(c, pre_delay(net, bad, c[0]))
    start = order[0]
    zero = Dbm.zero(d)
    while work:
        c, fed = work.popleft()
        stats.states_explored += 1
        if c == start and not fed.intersect_zone(zero).is_empty():
            break
        for t, pc in preds[c]:
            p = pre_transition(net, fed, t, pc[0])
            if not p.is_empty():
                add(pc, pre_delay(net, p, pc[0]))
    stats.zones_stored = sum(len(f) for f in reached.values())
    stats.wall_time = time.perf_counter() - t0
    hit = reached.get(start)
    status = "invalid" if hit is not None and not hit.intersect_zone(zero).is_empty() else "valid"
    return Verdict(status, None, stats)


# ---------------------------------------------------------------------------
# replay


def _valuation_ok(atoms: Iterable[tuple[int, int, int]], v: Sequence[Fraction]) -> bool:
    for i, j, b in atoms:
        if b == INF:
            continue
        c = b >> 1
        diff = v[i] - v[j]
        if diff > c or (diff == c and not b & 1):
            return False
    return True


def replay(net: Network, trace: Trace) -> ReplayResult:
    """Check that ``trace`` is an execution of ``net`` from the all-zero valuation."""
    locs, disc = net.initial_locs(), net.initial_disc()
    v = [Fraction(0)] * net.dim
    if not _valuation_ok(net.invariant(locs), v):
        return ReplayResult(False, 0, "initial valuation violates the invariant", locs, disc)
    for step, (kind, val) in enumerate(trace.events, start=1):
        if kind == "delay":
            if val < 0:
                return ReplayResult(False, step, "negative delay", locs, disc, tuple(v))
            v = [v[0]] + [x + val for x in v[1:]]
            if not _valuation_ok(net.invariant(locs), v):
                return ReplayResult(False, step, "delay violates an invariant", locs, disc, tuple(v))
            continue
        match = [t for t in net.transitions(locs, disc) if t.parts == tuple(val)]
        if not match:
            return ReplayResult(False, step, "no such enabled joint transition", locs, disc, tuple(v))
        t = match[0]
        if not _valuation_ok(t.guard, v):
            return ReplayResult(False, step, "clock guard not satisfied", locs, disc, tuple(v))
        for x in t.resets:
            v[x] = Fraction(0)
        locs, disc = t.target, t.disc
        if not _valuation_ok(net.invariant(locs), v):
            return ReplayResult(False, step, "target invariant violated", locs, disc, tuple(v))
    if trace.final_locs and tuple(net.loc_names(locs)) != tuple(trace.final_locs):
        return ReplayResult(False, None, "final locations differ", locs, disc, tuple(v))
    if trace.final_disc:
        env = net.env(disc)
        for n, x in trace.final_disc:
            if env.get(n) != x:
                return ReplayResult(False, None, f"final value of {n} differs", locs, disc, tuple(v))
    return ReplayResult(True, None, "", locs, disc, tuple(v))
