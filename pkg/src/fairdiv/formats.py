"""JSON instance and allocation files.

Rationals are written as integers when integral and as "p/q" strings
otherwise. Parse errors carry the line and column of the offending field.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction

from .core import Allocation, Instance, RestrictedCertificate, assert_partition
from .errors import DegenerateInstance, FairDivError

_RATIONAL = re.compile(r"^\s*(\d+)(?:\s*/\s*(\d+))?\s*$")


class FormatError(FairDivError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _position(text: str, key: str) -> tuple[int, int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    offset = m.start() if m else 0
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def _load(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, exc.colno) from None


def _fail(text: str, key: str, message: str):
    raise FormatError(message, *_position(text, key))


def encode_rational(x: Fraction) -> int | str:
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def decode_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise ValueError(f"not a rational: {x!r}")
    if isinstance(x, int):
        if x < 0:
            raise ValueError(f"negative value {x}")
        return Fraction(x)
    if isinstance(x, str):
        m = _RATIONAL.match(x)
        if m:
            den = int(m.group(2) or 1)
            if den == 0:
                raise ValueError(f"zero denominator in {x!r}")
            return Fraction(int(m.group(1)), den)
    raise ValueError(f"not a nonnegative integer or 'p/q' string: {x!r}")


def _int_field(text, obj, key, minimum=0) -> int:
    if key not in obj:
        _fail(text, key, f"missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        _fail(text, key, f"{key!r} must be an integer >= {minimum}")
    return v


def instance_to_json(instance: Instance) -> str:
    doc = {
        "model": instance.model,
        "num_agents": instance.num_agents,
        "num_goods": instance.num_goods,
        "values": [[encode_rational(v) for v in row] for row in instance.values],
    }
    cert = instance.restricted
    if cert is not None:
        doc["inherent"] = [encode_rational(v) for v in cert.inherent]
        doc["relevance"] = [sorted(s) for s in cert.relevance]
    return json.dumps(doc, indent=2) + "\n"


def instance_from_json(text: str) -> Instance:
    doc = _load(text)
    if not isinstance(doc, dict):
        raise FormatError("instance file must hold a JSON object", 1, 1)
    n = _int_field(text, doc, "num_agents", 1)
    m = _int_field(text, doc, "num_goods", 0)
    model = doc.get("model", "additive")
    if not isinstance(model, str):
        _fail(text, "model", "'model' must be a string")
    rows = doc.get("values")
    if not isinstance(rows, list) or len(rows) != n:
        _fail(text, "values", f"'values' must be a list of {n} rows")
    table = []
    for a, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != m:
            _fail(text, "values", f"row {a} of 'values' must have {m} entries")
        try:
            table.append([decode_rational(x) for x in row])
        except ValueError as exc:
            _fail(text, "values", f"row {a}: {exc}")
    cert = None
    if "inherent" in doc or "relevance" in doc:
        inh, rel = doc.get("inherent"), doc.get("relevance")
        if not isinstance(inh, list) or len(inh) != m:
            _fail(text, "inherent", f"'inherent' must list {m} values")
        if not isinstance(rel, list) or len(rel) != m:
            _fail(text, "relevance", f"'relevance' must list {m} agent sets")
        try:
            inherent = tuple(decode_rational(x) for x in inh)
        except ValueError as exc:
            _fail(text, "inherent", str(exc))
        sets = []
        for g, s in enumerate(rel):
            if not isinstance(s, list) or any(isinstance(a, bool) or not isinstance(a, int) or not 0 <= a < n for a in s):
                _fail(text, "relevance", f"entry {g} must list agent ids in [0, {n})")
            sets.append(frozenset(s))
        cert = RestrictedCertificate(inherent, tuple(sets))
    try:
        return Instance.from_table(table, restricted=cert, model=model)
    except (ValueError, DegenerateInstance) as exc:
        _fail(text, "inherent" if cert is not None else "values", str(exc))


def allocation_to_json(alloc: Allocation, info: dict | None = None) -> str:
    doc = alloc.to_lists()
    if info is not None:
        doc["info"] = info
    return json.dumps(doc, separators=(",", ":")) + "\n"


def allocation_from_json(text: str, num_agents: int, num_goods: int) -> Allocation:
    doc = _load(text)
    if not isinstance(doc, dict):
        raise FormatError("allocation file must hold a JSON object", 1, 1)
    pool, bundles = doc.get("pool", []), doc.get("bundles")

    def ids(key, xs):
        if not isinstance(xs, list) or any(isinstance(g, bool) or not isinstance(g, int) for g in xs):
            _fail(text, key, f"{key!r} must list integer good ids")
        return frozenset(xs)

    p = ids("pool", pool)
    if not isinstance(bundles, list) or len(bundles) != num_agents:
        _fail(text, "bundles", f"'bundles' must hold {num_agents} lists")
    alloc = Allocation(p, tuple(ids("bundles", b) for b in bundles))
    try:
        assert_partition(alloc, num_goods)
    except ValueError as exc:
        _fail(text, "bundles", f"not a partition of the goods: {exc}")
    return alloc
