"""Explicit-state CTL over the configuration graph of a clock-free network.

Without clocks every state may idle forever, so each configuration carries a
self-loop; with that, the timed and untimed path quantifiers coincide.
"""

from __future__ import annotations

import random

from tempo.explorer import config_graph
from tempo.model import Network
from tempo.tctl import AF, AG, AU, EF, EG, EU, And, FalseF, Imply, LocAtom, DiscCmp, Not, Or, TrueF


class Graph:
    def __init__(self, net: Network):
        self.net = net
        self.order, succ = config_graph(net)
        self.succ = {c: {nc for _, nc in outs} | {c} for c, outs in succ.items()}
        self.pred = {c: set() for c in self.order}
        for c, outs in self.succ.items():
            for nc in outs:
                self.pred[nc].add(c)


def _eu(g: Graph, a: set, b: set) -> set:
    res = set(b)
    work = list(b)
    while work:
        c = work.pop()
        for p in g.pred[c]:
            if p not in res and p in a:
                res.add(p)
                work.append(p)
    return res


def _eg(g: Graph, a: set) -> set:
    res = set(a)
    changed = True
    while changed:
        changed = False
        for c in list(res):
            if not g.succ[c] & res:
                res.discard(c)
                changed = True
    return res


def sat(g: Graph, f) -> set:
    every = set(g.order)
    if isinstance(f, TrueF):
        return every
    if isinstance(f, FalseF):
        return set()
    if isinstance(f, LocAtom):
        return {c for c in every if f.holds(c[0])}
    if isinstance(f, DiscCmp):
        return {c for c in every if f.holds(g.net, c[1])}
    if isinstance(f, Not):
        return every - sat(g, f.f)
    if isinstance(f, And):
        return sat(g, f.a) & sat(g, f.b)
    if isinstance(f, Or):
        return sat(g, f.a) | sat(g, f.b)
    if isinstance(f, Imply):
        return (every - sat(g, f.a)) | sat(g, f.b)
    if isinstance(f, EU):
        return _eu(g, sat(g, f.a), sat(g, f.b))
    if isinstance(f, EF):
        return _eu(g, every, sat(g, f.f))
    if isinstance(f, EG):
        return _eg(g, sat(g, f.f))
    if isinstance(f, AG):
        return every - _eu(g, every, every - sat(g, f.f))
    if isinstance(f, AF):
        return every - _eg(g, every - sat(g, f.f))
    if isinstance(f, AU):
        a, b = sat(g, f.a), sat(g, f.b)
        nb = every - b
        bad = _eu(g, nb, nb - a) | _eg(g, nb)
        return every - bad
    raise TypeError(f"unsupported {f}")


def holds(g: Graph, f) -> bool:
    return g.order[0] in sat(g, f)


def random_formula(rng: random.Random, net: Network, depth: int) -> str:
    if depth == 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.55:
            a = rng.choice(net.automata)
            return f"{a.name}@{rng.choice(a.locations).name}"
        if r < 0.95:
            return f"v {rng.choice(['==', '>=', '<', '!='])} {rng.randint(0, 2)}"
        return rng.choice(["true", "false"])
    op = rng.choice(["not", "and", "or", "imply", "EF", "AF", "EG", "AG", "EU", "AU"])
    sub = lambda: random_formula(rng, net, depth - 1)  # noqa: E731
    if op == "not":
        return f"not ({sub()})"
    if op in ("and", "or", "imply"):
        return f"({sub()}) {op} ({sub()})"
    if op in ("EU", "AU"):
        return f"{op[0]}[{sub()} U {sub()}]"
    return f"{op} ({sub()})"
