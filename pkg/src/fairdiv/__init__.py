"""Exact fair division of indivisible goods: EFX, EF2X and sqrt(2)/2-EFX
allocations for bounded-relevance and restricted additive valuations."""

from .core import (
    SQRT2,
    Allocation,
    BoundProfile,
    Instance,
    RestrictedCertificate,
    check_restricted_additive,
    classify_bounds,
    relevant_pair,
    relevant_set,
    value,
)
from .algorithms import ALGORITHMS, replay, run

__version__ = "0.1.0"

__all__ = [
    "SQRT2",
    "Allocation",
    "BoundProfile",
    "Instance",
    "RestrictedCertificate",
    "check_restricted_additive",
    "classify_bounds",
    "relevant_pair",
    "relevant_set",
    "value",
    "ALGORITHMS",
    "replay",
    "run",
]
