"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 3]

Each row times one kernel on one instance size for every available backend
and checks that the backends return identical results.
"""

import argparse
import sys
import time

from fairdiv import kernels
from fairdiv.algorithms import run
from fairdiv.generator import GenSpec, generate


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = sorted(kernels.backends())
    if "cython" not in names:
        print("compiled backend not built; only the Python kernels are available", file=sys.stderr)

    cases = [
        ("scan_efx", GenSpec(3, 8, "additive_infty1", seed=1)),
        ("scan_efx", GenSpec(4, 8, "restricted_p2", seed=2)),
        ("scan_efx", GenSpec(5, 8, "restricted_any", seed=3)),
        ("bundle_stats", GenSpec(8, 20, "additive_infty1", seed=4)),
        ("bundle_stats", GenSpec(30, 90, "restricted_any", seed=5)),
    ]
    print(f"{'kernel':<14}{'n':>4}{'m':>4}" + "".join(f"{b + ' (s)':>14}" for b in names) + f"{'speedup':>10}")
    for kernel, spec in cases:
        inst = generate(spec)
        if kernel == "scan_efx":
            calls = {b: (lambda b=b: kernels.scan_efx(inst, 1, first_only=False, backend=b)) for b in names}
        else:
            alg = "sqrt2-ra" if spec.model.startswith("restricted") else "cxxra"
            alloc = run(inst, alg, audit=False).allocation

            def stats(b):
                for _ in range(200):
                    out = kernels.bundle_stats(inst, alloc, backend=b)
                return out

            calls = {b: (lambda b=b: stats(b)) for b in names}
        times, outs = {}, {}
        for b, fn in calls.items():
            times[b], outs[b] = best_of(fn, args.repeat)
        if len({repr(o) for o in outs.values()}) != 1:
            print(f"backends disagree on {kernel} {spec}", file=sys.stderr)
            return 1
        speed = f"{times['python'] / times['cython']:.1f}x" if "cython" in times else "-"
        row = "".join(f"{times[b]:>14.4f}" for b in names)
        print(f"{kernel:<14}{spec.n:>4}{spec.m:>4}{row}{speed:>10}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
