"""Compiled vs pure-Python DBM kernels.

Times each kernel on the same random zones under both backends, then one
end-to-end run (all T2PC specifications at one size) per backend in a fresh
interpreter, since the backend is fixed at import.

    python benchmarks/bench_kernels.py [--dim 5] [--zones 2000] [--participants 1]
"""

from __future__ import annotations

import argparse
import json
import os
import random
import subprocess
import sys
import time

from tempo import _pykernels

try:
    from tempo import _ckernels
except ImportError:
    _ckernels = None


def random_raws(kernels, rng: random.Random, d: int, count: int) -> list:
    out = []
    while len(out) < count:
        r = kernels.pack([kernels.LE_ZERO] * (d * d), d)  # the origin
        for _ in range(rng.randint(1, 2 * d)):
            i, j = rng.sample(range(d), 2)
            c = rng.randint(0, 10) if j == 0 else -rng.randint(0, 10) if i == 0 else rng.randint(-10, 10)
            b = 2 * c + rng.randint(0, 1)
            nxt = kernels.constrain(kernels.up(r, d), d, i, j, b)
            if nxt is not None:
                r = nxt
        out.append(kernels.up(r, d))
    return out


def time_kernels(kernels, d: int, count: int, seed: int) -> dict[str, float]:
    rng = random.Random(seed)
    zs = random_raws(kernels, rng, d, count)
    pairs = list(zip(zs, zs[1:] + zs[:1]))
    kmax = [0] + [5] * (d - 1)
    ops = {
        "close": lambda: [kernels.close(z, d) for z in zs],
        "up": lambda: [kernels.up(z, d) for z in zs],
        "down": lambda: [kernels.down(z, d) for z in zs],
        "reset": lambda: [kernels.reset(z, d, 1) for z in zs],
        "free": lambda: [kernels.free(z, d, 1) for z in zs],
        "constrain": lambda: [kernels.constrain(z, d, 1, 0, 7) for z in zs],
        "includes": lambda: [kernels.includes(a, b, d) for a, b in pairs],
        "intersect": lambda: [kernels.intersect(a, b, d) for a, b in pairs],
        "extrapolate": lambda: [kernels.extrapolate(z, d, kmax) for z in zs],
        "subtract": lambda: [kernels.subtract(a, b, d) for a, b in pairs],
    }
    out = {}
    for name, fn in ops.items():
        t0 = time.perf_counter()
        fn()
        out[name] = (time.perf_counter() - t0) * 1e6 / count
    return out


END_TO_END = """
import json, time
from tempo.kernels import BACKEND
from tempo.t2pc import SpecId, build_t2pc, spec_formula
from tempo.tctl import check
net = build_t2pc({k})
t0 = time.perf_counter()
for sid in SpecId:
    check(net, spec_formula(sid, {k}, net), witness=False)
print(json.dumps({{"backend": BACKEND, "seconds": time.perf_counter() - t0}}))
"""


def end_to_end(k: int, pure: bool) -> dict:
    env = dict(os.environ, TEMPO_PURE_PYTHON="1" if pure else "0")
    res = subprocess.run(
        [sys.executable, "-c", END_TO_END.format(k=k)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=5, help="matrix dimension (clocks + 1)")
    ap.add_argument("--zones", type=int, default=2000)
    ap.add_argument("--participants", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled kernels are not built; only the Python backend is available")
    py = time_kernels(_pykernels, args.dim, args.zones, args.seed)
    cy = time_kernels(_ckernels, args.dim, args.zones, args.seed) if _ckernels else None

    print(f"per-call time in microseconds, dim {args.dim}, {args.zones} zones")
    print(f"{'kernel':<12} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, t in py.items():
        if cy:
            print(f"{name:<12} {t:>10.2f} {cy[name]:>10.2f} {t / cy[name]:>7.1f}x")
        else:
            print(f"{name:<12} {t:>10.2f} {'-':>10} {'-':>8}")

    print(f"\nall nine specifications, {args.participants} participant(s)")
    slow = end_to_end(args.participants, pure=True)
    print(f"  {slow['backend']:<8} {slow['seconds']:.2f} s")
    if _ckernels:
        fast = end_to_end(args.participants, pure=False)
        print(f"  {fast['backend']:<8} {fast['seconds']:.2f} s  ({slow['seconds'] / fast['seconds']:.1f}x)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
