"""Hot loops behind a backend switch.

The compiled module `_ckernels` is used when it was built and the instance
fits its int64 range; otherwise the pure-Python twin runs. Setting
FAIRDIV_PURE_PYTHON=1 forces the fallback at import.
"""

from __future__ import annotations

import os
from fractions import Fraction

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("FAIRDIV_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

BACKEND = "cython" if compiled_backend is not None else "python"

# Row totals below this keep 4 * total**2 inside a signed 64-bit integer.
INT64_SAFE = 1 << 30


def backends() -> dict:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out


def _pick(instance, backend=None):
    if backend is not None:
        mod = backends()[backend]
    else:
        fits = instance._cache.get("fits_int64")
        if fits is None:
            fits = all(sum(row) < INT64_SAFE for row in instance.table)
            instance._cache["fits_int64"] = fits
        mod = compiled_backend if (compiled_backend is not None and fits) else python_backend
    key = ("int_table", mod.__name__)
    handle = instance._cache.get(key)
    if handle is None:
        handle = mod.IntTable(instance.table)
        instance._cache[key] = handle
    return mod, handle


def bundle_stats(instance, alloc, backend=None):
    """Scaled-integer sums, minima, two-smallest sums and sizes per bundle."""
    mod, handle = _pick(instance, backend)
    return mod.bundle_stats(handle, alloc.owner_vector(instance.num_goods))


def _beta_sq(beta) -> tuple[int, int]:
    from ..core import SQRT2

    if beta is SQRT2:
        return 2, 1
    b = Fraction(beta) ** 2
    return b.numerator, b.denominator


def scan_efx(instance, beta=1, first_only=True, backend=None):
    num, den = _beta_sq(beta)
    if backend is None and max(num, den) > 4:
        backend = "python"
    mod, handle = _pick(instance, backend)
    return mod.scan_efx(handle, num, den, first_only)
