"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import random
import time

import numpy as np
import pytest

import ctl_oracle
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
from netgen import random_state_formula, timed_nets, untimed_nets
from tempo.cli import bench_size
from tempo.dbm import Federation, canonicalize, down, fed_subtract, free, includes, reset, up
from tempo.explorer import backward_reach, forward_reach, replay
from tempo.t2pc import (
    Deadlines,
    ProtocolParams,
    SpecId,
    build_t2pc,
    derive_deadlines,
    error_regions,
    expected_verdicts,
    spec_formula,
    spec_text,
)
from tempo.tctl import Not, check, is_reachability, parse_query


@pytest.fixture
def report(capsys):
    def emit(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    return emit


# ---------------------------------------------------------------------------
# DBM operations against the lattice oracle

C = 4
CASES = 1000


def _zone_ops(rng, pts, n):
    cons, z = random_zone(rng, n, C, boxed=rng.random() < 0.7)
    boxed_cons, bz = random_zone(rng, n, C)
    extra = random_constraints(rng, n, C, k=rng.randint(1, 3))
    x = rng.randint(1, n)
    _, other = random_zone(rng, n, C)
    fa = Federation(n + 1, [random_zone(rng, n, C)[1].raw for _ in range(rng.randint(1, 3))])
    fb = Federation(n + 1, [random_zone(rng, n, C)[1].raw for _ in range(rng.randint(1, 3))])
    live = not z.is_empty()
    return {
        "canonicalize": lambda: np.array_equal(dbm_mask(canonicalize(bz), pts), holds(boxed_cons, pts)),
        "up": lambda: not live or np.array_equal(dbm_mask(up(z), pts), up_mask(cons, pts, C)),
        "down": lambda: not live or np.array_equal(dbm_mask(down(z), pts), down_mask(cons, pts, C)),
        "constrain": lambda: np.array_equal(
            dbm_mask(bz.constrain(extra), pts), holds(boxed_cons + extra, pts)
        ),
        "reset": lambda: not live or np.array_equal(dbm_mask(reset(z, x), pts), reset_mask(cons, pts, x, C)),
        "free": lambda: not live or np.array_equal(dbm_mask(free(z, x), pts), free_mask(cons, pts, x, C)),
        "includes": lambda: includes(bz, other)
        == bool(np.all(dbm_mask(bz, pts) | ~dbm_mask(other, pts))),
        "fed_subtract": lambda: np.array_equal(
            fed_mask(fed_subtract(fa, fb), pts), fed_mask(fa, pts) & ~fed_mask(fb, pts)
        ),
    }


def test_dbm_oracle_equivalence(report):
    t0 = time.perf_counter()
    grids = {n: grid(n, C) for n in (1, 2, 3)}
    rng = random.Random(2024)
    bad: dict[str, int] = {}
    ran: dict[str, int] = {}
    for i in range(CASES):
        n = 1 + i % 3
        for name, run in _zone_ops(rng, grids[n], n).items():
            ran[name] = ran.get(name, 0) + 1
            if not run():
                bad[name] = bad.get(name, 0) + 1
    took = time.perf_counter() - t0
    ok = not bad and took < 60 and all(v == CASES for v in ran.values())
    report(
        "DBM oracle equivalence",
        ok,
        f"{CASES} cases x {len(ran)} operations, mismatches {sum(bad.values())} {bad or ''}, {took:.1f} s (limit 60 s)",
    )
    assert ok


# ---------------------------------------------------------------------------
# verdicts on the one-participant instance


def test_verdict_regression(report):
    t0 = time.perf_counter()
    net = build_t2pc(1)
    consts = dict(net.consts)
    want = expected_verdicts()
    got = {sid: check(net, spec_formula(sid, 1, net)).status for sid in SpecId}
    took = time.perf_counter() - t0
    ok = (
        got == want
        and took < 60
        and {k: consts[k] for k in ("D", "Dp", "DEC", "V", "exe_time")}
        == {"D": 80, "Dp": 52, "DEC": 40, "V": 15, "exe_time": 52}
    )
    wrong = [s.value for s in SpecId if got[s] != want[s]]
    report("Verdict regression", ok, f"9 specs, wrong {wrong}, {took:.2f} s (limit 60 s)")
    assert ok


# ---------------------------------------------------------------------------
# shape of the s2b counterexample


def test_s2b_counterexample_shape(report):
    net = build_t2pc(1)
    v = check(net, spec_formula("s2b", 1, net))
    res = replay(net, v.witness) if v.witness is not None else None
    fired = []
    for parts in (v.witness.fires() if v.witness is not None else []):
        for p, e in parts:
            a = net.automata[p]
            edge = a.edges[e]
            fired.append((a.name, a.locations[edge.src].name, a.locations[edge.dst].name, edge.sync))
    env = net.env(res.disc) if res else {}
    checks = {
        "replays": bool(res),
        "all votes yes": bool(res) and all(env[f"vote[{i}]"] == 2 for i in (1, 2)),
        "decision broadcast": any(f[3] in (("commit", "!"), ("abort", "!")) for f in fired),
        "Dp expiry fired": ("coor", "waitCompMsg", "coor_fail", None) in fired,
        "outcome abort": env.get("outcome") == 1,
    }
    ok = v.status == "invalid" and all(checks.values())
    failed = [k for k, good in checks.items() if not good]
    report("s2b counterexample shape", ok, f"{len(fired)} edge moves, failed checks {failed}")
    assert ok


# ---------------------------------------------------------------------------
# forward and backward reachability agree


def _reducible_targets(k, net):
    out = []
    for sid in SpecId:
        red = is_reachability(spec_formula(sid, k, net))
        if red is not None:
            kind, p = red
            out.append((f"k={k} {sid.value}", Not(p) if kind == "AG" else p))
    covered = {s for s in ("strong_atomicity", "s1", "s6")}
    for name, text in error_regions(k).items():
        if name not in covered:
            out.append((f"k={k} region {name}", parse_query(text, net)))
    return out


def test_forward_backward_agreement(report):
    t0 = time.perf_counter()
    disagree = []
    total = 0
    for k in (1, 2):
        net = build_t2pc(k)
        for label, target in _reducible_targets(k, net):
            total += 1
            f = forward_reach(net, target, witness=False).status
            b = backward_reach(net, target).status
            if f != b:
                disagree.append(label)
    rng = random.Random(99)
    for i, net in enumerate(timed_nets(20, start=1000)):
        for j in range(5):
            target = parse_query(random_state_formula(rng, net), net)
            total += 1
            if forward_reach(net, target, witness=False).status != backward_reach(net, target).status:
                disagree.append(f"random net {i} query {j}")
    took = time.perf_counter() - t0
    ok = not disagree
    report(
        "Forward/backward agreement",
        ok,
        f"{total} queries (T2PC k=1,2 and 20 random networks), disagreements {len(disagree)} {disagree or ''}, {took:.1f} s",
    )
    assert ok


# ---------------------------------------------------------------------------
# scaling


def test_scaling(report):
    t0 = time.perf_counter()
    specs = [s.value for s in SpecId]
    rows = {k: bench_size(k, specs, "forward", None) for k in (1, 2, 3)}
    took = time.perf_counter() - t0
    procs = [rows[k][0]["processes"] for k in (1, 2, 3)]
    complete = all(r["status"] == r["expected"] for k in rows for r in rows[k])
    monotone = all(
        rows[1][i]["states_explored"] <= rows[2][i]["states_explored"] <= rows[3][i]["states_explored"]
        for i in range(len(specs))
    )
    states = [max(r["states_explored"] for r in rows[k]) for k in (1, 2, 3)]
    ok = complete and monotone and procs == [6, 9, 12] and took < 600
    report(
        "Scaling",
        ok,
        f"processes {procs}, states {states}, all verdicts as expected {complete}, "
        f"monotone {monotone}, {took:.0f} s (limit 600 s)",
    )
    assert ok


# ---------------------------------------------------------------------------
# untimed CTL against explicit-state evaluation


def test_untimed_ctl_oracle(report):
    nets = untimed_nets(20, start=5000, limit=200)
    rng = random.Random(7)
    agree = total = 0
    sizes = []
    for net in nets:
        g = ctl_oracle.Graph(net)
        sizes.append(len(g.order))
        for _ in range(50):
            f = parse_query(ctl_oracle.random_formula(rng, net, 3), net)
            want = "valid" if ctl_oracle.holds(g, f) else "invalid"
            total += 1
            agree += check(net, f, witness=False).status == want
    ok = agree == total == 1000
    report(
        "Untimed CTL oracle",
        ok,
        f"{agree}/{total} agree on 20 networks ({min(sizes)}-{max(sizes)} configurations)",
    )
    assert ok


# ---------------------------------------------------------------------------
# deadline arithmetic


def test_deadline_splits(report):
    # every split of the budget with delta + tau_f = 28, tau_max + delta_star = 12,
    # delta + tau_d = 25
    seen = 0
    wrong = []
    for delta in range(0, 26):
        for tau_max in range(0, 13):
            p = ProtocolParams(
                D=80,
                delta=delta,
                tau_f=28 - delta,
                tau_max=tau_max,
                delta_star=12 - tau_max,
                tau_d=25 - delta,
            )
            seen += 1
            d = derive_deadlines(p)
            if d != Deadlines(52, 40, 15):
                wrong.append((delta, tau_max, d))
    default = derive_deadlines(ProtocolParams())
    ok = not wrong and default == Deadlines(52, 40, 15)
    report("Deadline arithmetic", ok, f"{seen} splits, wrong {len(wrong)}, default {default}")
    assert ok


def test_spec_texts_resolve_constants():
    # the bounded specifications use the derived deadlines symbolically
    net = build_t2pc(1)
    assert parse_query(spec_text("s3", 1), net).f.b.bound.const == 15
