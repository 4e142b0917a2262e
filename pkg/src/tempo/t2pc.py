"""Timed two-phase commit: deadlines, model generator and specification library.

Process order is the coordinator, the k participants, one CPU per process,
then one resource manager per CPU.  Index 1 (clock ``x[1]``, ``vote[1]``,
``decision[1]``...) belongs to the coordinator and index ``p`` in ``2..k+1``
to participant ``p - 1``; CPU ``j`` runs on clock ``x[k+1+j]``.

Values follow the usual encoding: 0 undefined, 1 abort (vote no), 2 commit
(vote yes).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

from tempo.errors import ParameterError
from tempo.model import Network, parse_model


@dataclass(frozen=True)
class ProtocolParams:
    D: int = 80
    delta: int = 3
    delta_star: int = 3
    tau_max: int = 9
    tau_d: int = 22
    tau_f: int = 25
    exe_time: int = 52
    lst: tuple[int, ...] = ()  # reservation window starts; recorded only
    t_i: tuple[int, ...] = ()

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            vals = val if isinstance(val, tuple) else (val,)
            if any(v < 0 for v in vals):
                raise ParameterError(f"parameter {f.name} must be nonnegative")


@dataclass(frozen=True)
class Deadlines:
    Dp: int
    DEC: int
    V: int


def derive_deadlines(p: ProtocolParams) -> Deadlines:
    """Completion, decision and vote deadlines from the delay budget."""
    dp = p.D - p.delta - p.tau_f
    dec = dp - p.tau_max - p.delta_star
    v = dec - p.delta - p.tau_d
    for name, val in (("Dp", dp), ("DEC", dec), ("V", v)):
        if val < 0:
            raise ParameterError(f"deadline {name} is negative ({val})")
    return Deadlines(dp, dec, v)


PARAM_KEYS = {f.name for f in fields(ProtocolParams)} - {"lst", "t_i"}


def parse_params(text: str) -> tuple[ProtocolParams, Deadlines]:
    """Read ``key = value`` lines; ``Dp``/``DEC``/``V`` override the derived values."""
    vals: dict[str, int] = {}
    over: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ParameterError(f"line {lineno}: expected key = value")
        try:
            num = int(raw)
        except ValueError:
            raise ParameterError(f"line {lineno}: {key} needs an integer value") from None
        if key in PARAM_KEYS:
            vals[key] = num
        elif key in ("Dp", "DEC", "V"):
            over[key] = num
        else:
            raise ParameterError(f"line {lineno}: unknown parameter {key!r}")
    p = ProtocolParams(**vals)
    if len(over) == 3:
        d = Deadlines(over["Dp"], over["DEC"], over["V"])
    else:
        base = derive_deadlines(p)
        d = Deadlines(over.get("Dp", base.Dp), over.get("DEC", base.DEC), over.get("V", base.V))
    if any(v < 0 for v in (d.Dp, d.DEC, d.V)):
        raise ParameterError("deadlines must be nonnegative")
    return p, d


# ---------------------------------------------------------------------------
# generator


def t2pc_text(k: int, p: ProtocolParams | None = None, d: Deadlines | None = None) -> str:
    """Model text for ``k`` participants."""
    if k < 1:
        raise ParameterError("at least one participant is required")
    p = p or ProtocolParams()
    d = d or derive_deadlines(p)
    n = k + 1
    parts = range(2, n + 1)
    out = ["# timed two-phase commit, %d participant(s)" % k, "consts"]
    out += [f"  D = {p.D}", f"  Dp = {d.Dp}", f"  DEC = {d.DEC}", f"  V = {d.V}"]
    out += [f"  exe_time = {p.exe_time}", "clocks"]
    out.append("  " + ", ".join(f"x[{i}]" for i in range(1, 2 * n + 1)))
    out.append("vars")
    for i in range(1, n + 1):
        out.append(f"  vote[{i}] 0..2 = 0")
        out.append(f"  decision[{i}] 0..2 = 0")
        out.append(f"  status[{i}] 0..1 = 0")
        out.append(f"  update[{i}] 0..1 = 0")
    for q in parts:
        out.append(f"  rcvd[{q}] 0..2 = 0")
    out.append("  outcome 0..2 = 0")
    if k > 1:
        out += [f"  nvotes 0..{k} = 0", f"  nyes 0..{k} = 0", f"  ncomp 0..{k} = 0"]
    for j in range(1, n + 1):
        out += [f"  busy{j} 0..1 = 0", f"  resource_granted{j} 0..1 = 0", f"  wait{j} 0..1 = 0"]
    out.append("channels")
    out += ["  start broadcast", "  commit broadcast", "  abort broadcast"]
    for j in range(1, n + 1):
        out += [f"  reserve{j} binary", f"  ready{j} binary", f"  finished{j} binary"]
    for q in parts:
        out += [f"  yes{q} binary", f"  no{q} binary", f"  comp{q} binary"]
    out += _coordinator(k)
    for q in parts:
        out += _participant(q)
    for j in range(1, n + 1):
        out += _cpu(j, f"x[{n + j}]")
    for j in range(1, n + 1):
        out += _manager(j, f"x[{j}]", f"x[{n + j}]")
    return "\n".join(out) + "\n"


def _coordinator(k: int) -> list[str]:
    x = "x[1]"
    out = [
        "automaton coor",
        f"  loc coor_idle {x} <= 0",
        f"  loc coor_begin {x} <= 0",
        f"  loc waitVotes {x} <= D",
        f"  loc sendDecision {x} < DEC",
        f"  loc waitCompMsg {x} <= Dp",
        f"  loc coor_final {x} <= Dp",
        f"  loc coor_fail {x} <= Dp",
        "  loc exception",
        "  init coor_idle",
        "  edge coor_idle -> coor_begin sync reserve1!",
    ]
    for v in (1, 2):
        out.append(
            f"  edge coor_begin -> waitVotes guard resource_granted1 == 1 sync start! "
            f"reset {x} do vote[1] := {v}"
        )
    last = "sendDecision"
    if k == 1:
        out += [
            f"  edge waitVotes -> {last} guard vote[1] == 2 and {x} < V sync yes2? do decision[1] := 2",
            f"  edge waitVotes -> {last} guard vote[1] == 1 and {x} < V sync yes2? do decision[1] := 1",
            f"  edge waitVotes -> {last} guard {x} < V sync no2? do decision[1] := 1",
        ]
    else:
        for q in range(2, k + 2):
            out += [
                f"  edge waitVotes -> waitVotes guard nvotes < {k - 1} and {x} < V sync yes{q}? "
                f"do nvotes := nvotes + 1, nyes := nyes + 1",
                f"  edge waitVotes -> waitVotes guard nvotes < {k - 1} and {x} < V sync no{q}? "
                f"do nvotes := nvotes + 1",
                f"  edge waitVotes -> {last} guard nvotes == {k - 1} and nyes == {k - 1} and "
                f"vote[1] == 2 and {x} < V sync yes{q}? do nvotes := {k}, nyes := {k}, decision[1] := 2",
                f"  edge waitVotes -> {last} guard nvotes == {k - 1} and nyes < {k - 1} and "
                f"{x} < V sync yes{q}? do nvotes := {k}, nyes := nyes + 1, decision[1] := 1",
                f"  edge waitVotes -> {last} guard nvotes == {k - 1} and nyes == {k - 1} and "
                f"vote[1] == 1 and {x} < V sync yes{q}? do nvotes := {k}, nyes := {k}, decision[1] := 1",
                f"  edge waitVotes -> {last} guard nvotes == {k - 1} and {x} < V sync no{q}? "
                f"do nvotes := {k}, decision[1] := 1",
            ]
    out += [
        f"  edge waitVotes -> coor_fail guard {x} >= V do decision[1] := 1",
        "  edge sendDecision -> waitCompMsg guard decision[1] == 2 sync commit!",
        "  edge sendDecision -> waitCompMsg guard decision[1] == 1 sync abort!",
    ]
    if k == 1:
        out.append(
            f"  edge waitCompMsg -> coor_final guard {x} < Dp sync comp2? do outcome := decision[1]"
        )
    else:
        for q in range(2, k + 2):
            out += [
                f"  edge waitCompMsg -> waitCompMsg guard ncomp < {k - 1} and {x} < Dp "
                f"sync comp{q}? do ncomp := ncomp + 1",
                f"  edge waitCompMsg -> coor_final guard ncomp == {k - 1} and {x} < Dp "
                f"sync comp{q}? do ncomp := {k}, outcome := decision[1]",
            ]
    out += [
        f"  edge waitCompMsg -> coor_fail guard {x} >= Dp",
        f"  edge coor_final -> exception guard {x} < D do update[1] := 1, status[1] := 1",
        f"  edge coor_final -> coor_fail guard {x} > D",
        "  edge coor_fail -> exception do outcome := 1, status[1] := 1",
    ]
    return out


def _participant(q: int) -> list[str]:
    y = f"x[{q}]"
    return [
        f"automaton part{q - 1}",
        "  loc part_idle",
        f"  loc part_reserve {y} <= 0",
        f"  loc part_start {y} < V",
        f"  loc part_wait {y} < DEC",
        f"  loc sendCompMsg {y} < D",
        f"  loc part_final {y} <= Dp",
        "  loc part_fail",
        "  loc exception",
        "  init part_idle",
        f"  edge part_idle -> part_reserve sync start? reset {y}",
        f"  edge part_reserve -> part_start sync reserve{q}!",
        f"  edge part_start -> part_wait guard resource_granted{q} == 1 sync yes{q}! do vote[{q}] := 2",
        f"  edge part_start -> part_wait sync no{q}! do vote[{q}] := 1",
        f"  edge part_start -> part_fail guard {y} >= V",
        f"  edge part_wait -> sendCompMsg sync commit? do rcvd[{q}] := 2",
        f"  edge part_wait -> sendCompMsg sync abort? do rcvd[{q}] := 1",
        f"  edge part_wait -> part_fail guard {y} >= DEC",
        f"  edge sendCompMsg -> part_final guard {y} < Dp sync comp{q}! do decision[{q}] := rcvd[{q}]",
        f"  edge sendCompMsg -> exception guard {y} > Dp do status[{q}] := 1",
        f"  edge part_final -> exception guard {y} < D do update[{q}] := 1, status[{q}] := 1",
        f"  edge part_final -> part_fail guard {y} > D",
        f"  edge part_fail -> exception do decision[{q}] := 1, status[{q}] := 1",
    ]


def _cpu(j: int, c: str) -> list[str]:
    return [
        f"automaton cpu{j}",
        "  loc idle",
        f"  loc InUse {c} <= exe_time",
        "  init idle",
        f"  edge idle -> InUse sync ready{j}? reset {c} do busy{j} := 1",
        f"  edge InUse -> idle guard {c} == exe_time sync finished{j}! do busy{j} := 0",
    ]


def _manager(j: int, owner: str, c: str) -> list[str]:
    # answers at once: a request arrives when the owner's clock reads 0 and a
    # release when the CPU clock reads exe_time
    return [
        f"automaton manager{j}",
        "  loc idle",
        f"  loc M1 {owner} <= 0",
        f"  loc M2 {c} <= exe_time",
        "  init idle",
        f"  edge idle -> M1 sync reserve{j}?",
        f"  edge idle -> M2 sync finished{j}?",
        f"  edge M1 -> idle guard busy{j} == 0 sync ready{j}! do resource_granted{j} := 1",
        f"  edge M1 -> idle guard busy{j} == 1 do wait{j} := 1",
        f"  edge M2 -> idle guard wait{j} == 1 sync ready{j}! do wait{j} := 0, resource_granted{j} := 1",
        "  edge M2 -> idle guard wait%d == 0" % j,
    ]


def build_t2pc(k: int, p: ProtocolParams | None = None, d: Deadlines | None = None) -> Network:
    return parse_model(t2pc_text(k, p, d))


# ---------------------------------------------------------------------------
# specifications


class SpecId(enum.Enum):
    strong_atomicity = "strong_atomicity"
    afag_atomicity = "afag_atomicity"
    s1 = "s1"
    s2a = "s2a"
    s2b = "s2b"
    s3 = "s3"
    s4 = "s4"
    s5 = "s5"
    s6 = "s6"


def _conj(items: list[str]) -> str:
    return items[0] if len(items) == 1 else "(" + " and ".join(items) + ")"


def _disj(items: list[str]) -> str:
    return items[0] if len(items) == 1 else "(" + " or ".join(items) + ")"


def spec_text(sid: SpecId | str, k: int) -> str:
    sid = SpecId(sid)
    idx = range(1, k + 2)
    parts = range(2, k + 2)
    same = _conj([f"decision[{i}] == decision[{j}]" for i in idx for j in idx if i < j])
    if sid is SpecId.strong_atomicity:
        return f"AG {same}"
    if sid is SpecId.afag_atomicity:
        return f"AF AG {same}"
    if sid is SpecId.s1:
        mixed = [
            f"(decision[{a}]=={u} and decision[{b}]=={w})"
            for i in idx
            for j in idx
            if i < j
            for a, b, u, w in ((i, j, 1, 2), (i, j, 2, 1))
        ]
        return f"AG not {_disj(mixed) if len(mixed) > 1 else mixed[0]}"
    if sid is SpecId.s2a:
        return f"AG ({_disj([f'vote[{i}] == 1' for i in idx])} imply AF outcome == 1)"
    if sid is SpecId.s2b:
        return f"AG ({_conj([f'vote[{i}] == 2' for i in idx])} imply AF outcome == 2)"
    if sid is SpecId.s3:
        return "AG (P1@waitVotes imply AF{<=V} P1@sendDecision)"
    if sid is SpecId.s4:
        body = [f"(P{q}@part_wait imply AF{{<=DEC}} P{q}@sendCompMsg)" for q in parts]
        return f"AG {_conj(body)}"
    if sid is SpecId.s5:
        return "AG (P1@waitCompMsg imply AF{<=Dp} (P1@coor_final or P1@coor_fail))"
    statuses = _conj([f"status[{i}] == 1" for i in idx])
    return f"AG (x[1] == D imply {statuses})"


# bounded-response renderings of the termination property
ALTERNATES = {
    SpecId.s6: (
        "AF {statuses}",
        "AF{{<=D}} {statuses}",
    ),
}


def alternate_texts(sid: SpecId | str, k: int) -> list[str]:
    sid = SpecId(sid)
    statuses = _conj([f"status[{i}] == 1" for i in range(1, k + 2)])
    return [t.format(statuses=statuses) for t in ALTERNATES.get(sid, ())]


def spec_formula(sid: SpecId | str, k: int, net: Network | None = None):
    """The specification as a formula resolved against ``net`` (default instance if omitted)."""
    from tempo.tctl import parse_query

    if net is None:
        net = build_t2pc(k)
    return parse_query(spec_text(sid, k), net)


def expected_verdicts() -> dict[SpecId, str]:
    return {
        SpecId.strong_atomicity: "invalid",
        SpecId.afag_atomicity: "invalid",
        SpecId.s1: "valid",
        SpecId.s2a: "valid",
        SpecId.s2b: "invalid",
        SpecId.s3: "valid",
        SpecId.s4: "valid",
        SpecId.s5: "valid",
        SpecId.s6: "valid",
    }


def error_regions(k: int) -> dict[str, str]:
    """State predicates whose reachability answers a property, for both search directions."""
    idx = range(1, k + 2)
    parts = range(2, k + 2)
    same = _conj([f"decision[{i}] == decision[{j}]" for i in idx for j in idx if i < j])
    mixed = _disj(
        [
            f"(decision[{i}]=={u} and decision[{j}]=={w})"
            for i in idx
            for j in idx
            if i != j
            for u, w in ((1, 2),)
        ]
    )
    statuses = _conj([f"status[{i}] == 1" for i in idx])
    return {
        "strong_atomicity": f"not {same}",
        "s1": mixed,
        "s2a": f"{_disj([f'vote[{i}] == 1' for i in idx])} and outcome == 2",
        "s2b": f"{_conj([f'vote[{i}] == 2' for i in idx])} and P1@exception and outcome == 1",
        "s3": "P1@waitVotes and x[1] > V",
        "s4": _disj([f"(P{q}@part_wait and x[{q}] > DEC)" for q in parts]),
        "s5": "P1@waitCompMsg and x[1] > Dp",
        "s6": f"x[1] == D and not {statuses}",
    }
