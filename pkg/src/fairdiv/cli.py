"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 malformed input or an
infeasible request, 3 instance outside the algorithm's class, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import oracle
from .algorithms import ALGORITHMS, run
from .core import SQRT2, value
from .errors import (
    BudgetExceeded,
    ClassMismatch,
    FairDivError,
    InfeasibleSpec,
    InvariantViolated,
    SuperUnitCycle,
    UndefinedWeight,
    UnknownProperty,
)
from .fairness import check_alpha_efx, check_ef2x, check_named_property
from .formats import (
    FormatError,
    allocation_from_json,
    allocation_to_json,
    encode_rational,
    instance_from_json,
    instance_to_json,
)
from .generator import MODELS, GenSpec, corpus_specs, generate

EXIT_FAIL, EXIT_INPUT, EXIT_CLASS, EXIT_BUG = 1, 2, 3, 4

DEFAULT_MODEL = {
    "cxxra": "additive_infty1",
    "sqrt2-ra": "restricted_any",
    "sqrt2-pq": "additive_infty1",
    "pqrax": "restricted_p2",
}


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _range(text: str) -> tuple[int, int]:
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO-HI, got {text!r}") from None


# ------------------------------------------------------------------ gen

def cmd_gen(args) -> int:
    spec = GenSpec(args.agents, args.goods, args.model, (args.value_lo, args.value_hi), args.p, args.q, args.seed)
    _write(args.out, instance_to_json(generate(spec)))
    return 0


# ------------------------------------------------------------------ run

def cmd_run(args) -> int:
    inst = instance_from_json(_read(args.input))
    result = run(inst, args.alg, audit=not args.no_audit)
    info = {
        "algorithm": args.alg,
        "steps": len(result.trace),
        "pre_final_pool": result.pre_final_pool,
        "rules": result.trace.rule_counts(),
    }
    _write(args.out, allocation_to_json(result.allocation, info))
    if args.trace:
        _write(args.trace, result.trace_jsonl())
    return 0


# ------------------------------------------------------------------ verify

def _violation_json(v) -> dict:
    out = {"agent": v.i, "other": v.j, "witness": list(v.witness), "margin": encode_rational(v.margin)}
    if v.note:
        out["note"] = v.note
    return out


def cmd_verify(args) -> int:
    inst = instance_from_json(_read(args.input))
    alloc = allocation_from_json(_read(args.alloc), inst.num_agents, inst.num_goods)
    check = args.check
    try:
        if check == "efx":
            rep = check_alpha_efx(inst, alloc, 1)
        elif check == "ef2x":
            rep = check_ef2x(inst, alloc)
        elif check == "efx-sqrt2":
            rep = check_alpha_efx(inst, alloc, SQRT2)
        elif check.startswith("prop:"):
            rep = check_named_property(inst, alloc, check[5:])
        else:
            raise UsageError(f"unknown check {check!r}")
    except UnknownProperty:
        raise UsageError(f"unknown property {check[5:]!r}") from None
    except (UndefinedWeight, SuperUnitCycle) as exc:
        print(json.dumps({"check": check, "result": "fail", "error": str(exc)}))
        return EXIT_FAIL
    doc = {
        "check": check,
        "result": "pass" if rep.passed else "fail",
        "violations": [_violation_json(v) for v in rep.violations],
    }
    print(json.dumps(doc, separators=(",", ":")))
    return 0 if rep.passed else EXIT_FAIL


# ------------------------------------------------------------------ oracle

def cmd_oracle(args) -> int:
    inst = instance_from_json(_read(args.input))
    if args.check == "efx-exists":
        wit = oracle.exists_efx(inst, args.budget)
        doc = {"efx_exists": wit is not None, "witness": wit.to_lists() if wit else None}
    elif args.check == "max-nsw":
        best = oracle.max_nsw_complete(inst, args.budget)
        zeros, prod = oracle.nsw_key(inst, best)
        doc = {"allocation": best.to_lists(), "zero_agents": -zeros, "nsw_product": encode_rational(prod)}
    else:
        if args.alloc is None:
            raise UsageError("--check rank needs --alloc")
        alloc = allocation_from_json(_read(args.alloc), inst.num_agents, inst.num_goods)
        try:
            rows = []
            for i in range(inst.num_agents):
                r, path = oracle.brute_rank(inst, alloc, i)
                own = value(inst, i, alloc.bundles[i])
                rows.append(
                    {
                        "agent": i,
                        "rank": encode_rational(r),
                        "path": list(path),
                        "virtual_value": encode_rational(own / r),
                    }
                )
        except (SuperUnitCycle, UndefinedWeight) as exc:
            print(json.dumps({"error": str(exc)}))
            return EXIT_FAIL
        doc = {"ranks": rows}
    print(json.dumps(doc, separators=(",", ":")))
    return 0


# ------------------------------------------------------------------ bench

def _bench_one(job):
    alg, spec, audit = job
    inst = generate(spec)
    algo = ALGORITHMS[alg]
    try:
        res = run(inst, alg, audit=audit)
    except FairDivError as exc:
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    rep = algo.verify(inst, res.allocation)
    return {
        "ok": rep.passed and res.allocation.complete,
        "pool": res.pre_final_pool,
        "rules": res.trace.rule_counts(),
        "allocation": res.allocation.to_lists(),
        "trace": res.trace_jsonl(),
    }


def cmd_bench(args) -> int:
    model = args.model or DEFAULT_MODEL[args.alg]
    specs = corpus_specs(
        model, args.count, args.seed, args.agents, args.goods, (args.value_lo, args.value_hi), args.p, args.q
    )
    for s in specs:
        generate(s)  # surface InfeasibleSpec before any work is scheduled
    jobs = [(args.alg, s, not args.no_audit) for s in specs]
    start = time.perf_counter()
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            results = list(ex.map(_bench_one, jobs, chunksize=8))
    else:
        results = [_bench_one(j) for j in jobs]
    wall = time.perf_counter() - start
    passed = sum(r["ok"] for r in results)
    pools = Counter(r["pool"] for r in results if "pool" in r)
    rules = Counter()
    for r in results:
        rules.update(r.get("rules", {}))
    failures = [{"index": k, "seed": specs[k].seed, "error": r.get("error", "claim failed")}
                for k, r in enumerate(results) if not r["ok"]]
    report = {
        "algorithm": args.alg,
        "model": model,
        "claim": ALGORITHMS[args.alg].claim,
        "count": args.count,
        "passed": passed,
        "pass_rate": f"{passed}/{args.count}",
        "pool_histogram": {str(k): pools[k] for k in sorted(pools)},
        "rule_counts": {k: rules[k] for k in sorted(rules)},
        "failures": failures,
    }
    print(json.dumps(report, indent=2))
    if args.out:
        lines = [json.dumps({"index": k, "seed": specs[k].seed, **{x: r[x] for x in ("ok", "allocation") if x in r}},
                            separators=(",", ":")) for k, r in enumerate(results)]
        Path(args.out).write_text("\n".join(lines) + "\n")
    if args.trace_out:
        Path(args.trace_out).write_text("".join(
            "".join(json.dumps({"index": k, **json.loads(line)}, separators=(",", ":")) + "\n"
                    for line in r.get("trace", "").splitlines())
            for k, r in enumerate(results)))
    print(f"wall time: {wall:.3f} s", file=sys.stderr)
    return 0 if passed == args.count else EXIT_FAIL


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairdiv", description="Exact fair division of indivisible goods.")
    sub = ap.add_subparsers(dest="command", required=True)

    def values(p):
        p.add_argument("--value-lo", type=int, default=1)
        p.add_argument("--value-hi", type=int, default=20)
        p.add_argument("--p", type=int)
        p.add_argument("--q", type=int)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--model", choices=MODELS, default="restricted_p2")
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--goods", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    values(g)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm on an instance file")
    r.add_argument("--alg", choices=sorted(ALGORITHMS), required=True)
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out")
    r.add_argument("--trace")
    r.add_argument("--no-audit", action="store_true", help="skip per-step invariant checks")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check an allocation")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--alloc", required=True)
    v.add_argument("--check", required=True, help="efx | ef2x | efx-sqrt2 | prop:<name>")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="brute-force answers for small instances")
    o.add_argument("--in", dest="input", required=True)
    o.add_argument("--check", choices=("efx-exists", "max-nsw", "rank"), required=True)
    o.add_argument("--alloc")
    o.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run and verify a seeded batch")
    b.add_argument("--alg", choices=sorted(ALGORITHMS), required=True)
    b.add_argument("--model", choices=MODELS)
    b.add_argument("--count", type=int, default=100)
    b.add_argument("--agents", type=_range, default=(2, 8), help="N or LO-HI")
    b.add_argument("--goods", type=_range, default=None, help="N or LO-HI (default n to 2n+4)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-audit", action="store_true")
    b.add_argument("--out", help="write per-instance allocations as JSON lines")
    b.add_argument("--trace-out", help="write all traces as JSON lines")
    values(b)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, InfeasibleSpec, BudgetExceeded, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ClassMismatch as exc:
        print(f"class mismatch: {exc}", file=sys.stderr)
        return EXIT_CLASS
    except InvariantViolated as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_BUG


if __name__ == "__main__":
    sys.exit(main())
