"""Compare the compiled join kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--end-to-end]

Micro-benchmarks call both kernel modules directly on the same inputs.
``--end-to-end`` also times a simulator run in a subprocess per
implementation, switching with ``DELTACRDT_PURE``.
"""

from __future__ import annotations

import argparse
import os
import random
import subprocess
import sys
import timeit

from deltacrdt import _pykernels

try:
    from deltacrdt import _kernels
except ImportError:
    _kernels = None


def _inputs(seed: int = 0):
    rng = random.Random(seed)
    replicas = [f"r{n}" for n in range(16)]
    vec_a = {r: rng.randrange(500, 1000) for r in replicas}
    vec_b = {r: rng.randrange(500, 1000) for r in replicas}
    cloud_a = frozenset((r, vec_a[r] + rng.randrange(2, 50)) for r in replicas for _ in range(4))
    cloud_b = frozenset((r, vec_b[r] + rng.randrange(2, 50)) for r in replicas for _ in range(4))
    dots_a = frozenset((r, n) for r in replicas for n in range(1, vec_a[r] + 1, 7))
    dots_b = frozenset((r, n) for r in replicas for n in range(1, vec_b[r] + 1, 5))
    fun_a = {d: 1 for d in list(dots_a)[:2000]}
    fun_b = {d: 1 for d in list(dots_b)[:2000]}
    scattered = frozenset((r, n) for r in replicas for n in range(1, 300) if rng.random() < 0.9)
    return {
        "max_merge": lambda k: k.max_merge(vec_a, vec_b),
        "compact": lambda k: k.compact({}, scattered),
        "ctx_union": lambda k: k.ctx_union(vec_a, cloud_a, vec_b, cloud_b),
        "dotset_join": lambda k: k.dotset_join(dots_a, vec_a, cloud_a, dots_b, vec_b, cloud_b),
        "dotfun_join": lambda k: k.dotfun_join(fun_a, vec_a, cloud_a, fun_b, vec_b, cloud_b, max),
    }


def micro(repeat: int) -> list[tuple[str, float, float | None]]:
    rows = []
    for name, call in _inputs().items():
        if _kernels is not None:
            assert call(_kernels) == call(_pykernels), name
        py = min(timeit.repeat(lambda: call(_pykernels), number=repeat, repeat=3)) / repeat
        cy = None
        if _kernels is not None:
            cy = min(timeit.repeat(lambda: call(_kernels), number=repeat, repeat=3)) / repeat
        rows.append((name, py, cy))
    return rows


_E2E = """
import time
from deltacrdt import kernels, simnet
from deltacrdt.scenario import EngineConfig, FaultConfig, Scenario, Workload
sc = Scenario.build("ormap(str, awset(int))", 5, workload=Workload(200, 200),
                    faults=FaultConfig(drop=0.5, dup=0.3, max_delay=10),
                    engine=EngineConfig(kind="basic", transitive=False), seed=1)
t = time.perf_counter()
for _ in range(3):
    simnet.run(sc)
print(kernels.IMPLEMENTATION, (time.perf_counter() - t) / 3)
"""


def end_to_end() -> dict[str, float]:
    out = {}
    for pure in ("1", "0"):
        env = dict(os.environ, DELTACRDT_PURE=pure)
        res = subprocess.run([sys.executable, "-c", _E2E], env=env, capture_output=True, text=True, check=True)
        impl, secs = res.stdout.split()
        out[impl] = float(secs)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the pure-Python timings are shown")
    print(f"{'kernel':<14}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, py, cy in micro(args.repeat):
        cy_s = f"{cy * 1e6:12.1f}" if cy is not None else f"{'-':>12}"
        sp = f"{py / cy:9.2f}x" if cy else f"{'-':>10}"
        print(f"{name:<14}{py * 1e6:12.1f}{cy_s}{sp}")
    if args.end_to_end:
        e2e = end_to_end()
        print()
        for impl, secs in sorted(e2e.items()):
            print(f"simulator run ({impl}): {secs * 1000:.1f} ms")
        if "cython" in e2e:
            print(f"end-to-end speedup: {e2e['python'] / e2e['cython']:.2f}x")


if __name__ == "__main__":
    main()
