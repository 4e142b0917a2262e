"""Command-line front end.

Exit status: 0 valid, 1 invalid, 2 usage/model/query error or a
forward/backward disagreement, 3 zone storage over ``TEMPO_MEM_LIMIT_MB``.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from tempo.errors import MemoryLimitExceeded, TempoError
from tempo.explorer import Trace, Verdict, backward_reach, forward_reach, replay
from tempo.model import Network, parse_model
from tempo.t2pc import SpecId, build_t2pc, expected_verdicts, parse_params, spec_text, t2pc_text
from tempo.tctl import Formula, Not, check, is_reachability, parse_query


@dataclass
class Outcome:
    label: str
    status: str
    verdict: Verdict | None = None
    note: str = ""


def participants_of(net: Network) -> int | None:
    k = sum(1 for a in net.automata if re.fullmatch(r"part\d+", a.name))
    return k or None


def spec_id(name: str) -> SpecId | None:
    name = name.strip()
    for cand in (name, re.sub(r"^spec", "s", name)):
        try:
            return SpecId(cand)
        except ValueError:
            pass
    return None


def resolve_queries(arg: str, net: Network) -> list[tuple[str, str]]:
    """``(label, text)`` pairs from ``--query``: inline text, ``@file`` or ``@specid``."""
    if not arg.startswith("@"):
        return [(arg, arg)]
    ref = arg[1:]
    if os.path.isfile(ref):
        with open(ref, encoding="utf-8") as fh:
            lines = [ln.split("#", 1)[0].strip() for ln in fh]
        return [(ln, ln) for ln in lines if ln]
    sid = spec_id(ref)
    if sid is None:
        raise TempoError(f"no query file or specification named {ref!r}")
    k = participants_of(net)
    if k is None:
        raise TempoError(f"@{ref} needs a generated T2PC model")
    return [(sid.value, spec_text(sid, k))]


def run_query(net: Network, f: Formula, direction: str, label: str) -> Outcome:
    red = is_reachability(f)
    if red is None:
        v = check(net, f)
        note = "" if direction == "forward" else "fixpoint engine (not a reachability query)"
        return Outcome(label, v.status, v, note)
    kind, p = red
    target = Not(p) if kind == "AG" else p

    def as_status(v: Verdict) -> str:
        # the searches answer "target reachable" with "invalid"
        if kind == "AG":
            return v.status
        return "valid" if v.status == "invalid" else "invalid"

    fwd = bwd = None
    if direction in ("forward", "both"):
        fwd = forward_reach(net, target)
    if direction in ("backward", "both"):
        bwd = backward_reach(net, target)
    if fwd is not None and bwd is not None and fwd.status != bwd.status:
        return Outcome(label, "disagree", fwd, f"forward {as_status(fwd)}, backward {as_status(bwd)}")
    v = fwd or bwd
    status = as_status(v)
    v.status = status
    return Outcome(label, status, v)


EXIT = {"valid": 0, "invalid": 1, "disagree": 2}


def _trace_path(base: str | None, model: str, n: int, i: int) -> str:
    path = base or os.path.splitext(os.path.basename(model))[0] + ".trace"
    if n > 1:
        stem, ext = os.path.splitext(path)
        path = f"{stem}.{i + 1}{ext}"
    return path


def cmd_check(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        net = parse_model(fh.read())
    queries = resolve_queries(args.query, net)
    worst = 0
    for i, (label, text) in enumerate(queries):
        f = parse_query(text, net)
        out = run_query(net, f, args.direction, label)
        v = out.verdict
        trace_file = None
        if v is not None and v.witness is not None:
            trace_file = _trace_path(args.trace_out, args.model, len(queries), i)
            with open(trace_file, "w", encoding="utf-8") as fh:
                fh.write(v.witness.dumps())
        if out.status == "disagree":
            print(f"error: directions disagree on {label}: {out.note}", file=sys.stderr)
        stats = v.stats.as_dict() if v is not None else {}
        if args.json:
            row = {"query": label, "status": out.status, "direction": args.direction, **stats}
            row["witness"] = trace_file
            print(json.dumps(row))
        else:
            line = f"{out.status:8s} {label}"
            if stats:
                line += (
                    f"  [states {stats['states_explored']}, zones {stats['zones_stored']},"
                    f" {stats['wall_time_ms']} ms]"
                )
            print(line)
            if trace_file:
                print(f"  trace written to {trace_file}")
        worst = max(worst, EXIT[out.status])
    return worst


def cmd_gen(args) -> int:
    p = d = None
    if args.params:
        with open(args.params, encoding="utf-8") as fh:
            p, d = parse_params(fh.read())
    sys.stdout.write(t2pc_text(args.participants, p, d))
    return 0


def cmd_replay(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        net = parse_model(fh.read())
    with open(args.trace, encoding="utf-8") as fh:
        try:
            trace = Trace.loads(fh.read())
        except ValueError as exc:
            raise TempoError(f"trace: {exc}") from None
    res = replay(net, trace)
    if res:
        print(f"ok: {len(trace.events)} steps replayed")
        return 0
    where = f"step {res.step}" if res.step is not None else "end of trace"
    print(f"invalid at {where}: {res.message}")
    return 1


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("participant counts must be positive")
    return vals


def _spec_list(text: str) -> list[SpecId]:
    if text == "all":
        return list(SpecId)
    out = []
    for name in text.split(","):
        sid = spec_id(name)
        if sid is None:
            raise argparse.ArgumentTypeError(f"unknown specification {name!r}")
        out.append(sid)
    return out


def bench_size(k: int, specs: list[str], direction: str, params: str | None) -> list[dict]:
    """All requested specifications on one instance; one engine per process."""
    p = d = None
    if params:
        p, d = parse_params(params)
    net = build_t2pc(k, p, d)
    expected = expected_verdicts()
    rows = []
    for name in specs:
        sid = SpecId(name)
        t0 = time.perf_counter()
        try:
            out = run_query(net, parse_query(spec_text(sid, k), net), direction, sid.value)
            status = out.status
            stats = out.verdict.stats.as_dict()
        except MemoryLimitExceeded:
            status, stats = "out-of-memory", {"states_explored": None, "zones_stored": None}
        stats["wall_time_ms"] = round((time.perf_counter() - t0) * 1000, 3)
        rows.append(
            {
                "participants": k,
                "processes": len(net.automata),
                "spec": sid.value,
                "status": status,
                "expected": expected[sid],
                **stats,
            }
        )
    return rows


def cmd_bench(args) -> int:
    if args.model != "t2pc":
        raise TempoError(f"unknown benchmark {args.model!r}; only t2pc is available")
    params = None
    if args.params:
        with open(args.params, encoding="utf-8") as fh:
            params = fh.read()
        parse_params(params)  # report errors before spawning workers
    specs = [s.value for s in args.specs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = [pool.submit(bench_size, k, specs, args.direction, params) for k in args.participants]
            groups = [f.result() for f in futs]
    else:
        groups = [bench_size(k, specs, args.direction, params) for k in args.participants]
    rows = [r for g in groups for r in g]
    if args.json:
        for r in rows:
            print(json.dumps(r))
    else:
        head = f"{'procs':>5} {'spec':<17} {'status':<13} {'expected':<8} {'states':>8} {'zones':>8} {'ms':>10}"
        print(head)
        print("-" * len(head))
        for r in rows:
            print(
                f"{r['processes']:>5} {r['spec']:<17} {r['status']:<13} {r['expected']:<8} "
                f"{r['states_explored'] if r['states_explored'] is not None else 'x':>8} "
                f"{r['zones_stored'] if r['zones_stored'] is not None else 'x':>8} "
                f"{r['wall_time_ms']:>10}"
            )
    if any(r["status"] == "disagree" for r in rows):
        return 2
    if any(r["status"] == "out-of-memory" for r in rows):
        return 3
    return 0 if all(r["status"] == r["expected"] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tempo", description="Zone-based timed automata model checker.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="check queries against a model")
    c.add_argument("model")
    c.add_argument("--query", required=True, help="query text, @file, or @specid for T2PC models")
    c.add_argument("--direction", choices=("forward", "backward", "both"), default="forward")
    c.add_argument("--trace-out", help="where to write a counterexample trace")
    c.add_argument("--json", action="store_true")
    c.set_defaults(fn=cmd_check)

    g = sub.add_parser("gen", help="generate a model")
    g.add_argument("family", choices=("t2pc",))
    g.add_argument("--participants", type=int, required=True)
    g.add_argument("--params", help="key = value parameter file")
    g.set_defaults(fn=cmd_gen)

    r = sub.add_parser("replay", help="replay a trace against a model")
    r.add_argument("model")
    r.add_argument("trace")
    r.set_defaults(fn=cmd_replay)

    b = sub.add_parser("bench", help="run the specification table on generated models")
    b.add_argument("model")
    b.add_argument("--participants", type=_int_list, default=[1, 2, 3])
    b.add_argument("--specs", type=_spec_list, default=list(SpecId))
    b.add_argument("--direction", choices=("forward", "backward", "both"), default="forward")
    b.add_argument("--params", help="key = value parameter file")
    b.add_argument("--json", action="store_true")
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(fn=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MemoryLimitExceeded as exc:
        print(f"out of memory: {exc}", file=sys.stderr)
        return 3
    except TempoError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
