"""Locality calculus of the identity task.

Level 0 holds the ``s = 2^(n^2)`` patch symbols. A preprocessor at level i
must keep every unordered pair of level-(i-1) symbols, so

    |S_i| = s^2 - C(s, 2) = s (s + 1) / 2
    compression factor C_i = 2 log2|S_{i-1}| / log2|S_i|

Cardinalities grow doubly exponentially, so everything is tracked as
``L_i = log2|S_i|`` with the recurrence

    L_i = 2 L_{i-1} - 1 + log2(1 + 2^-L_{i-1})

and ``C_i - 1 = (1 - log2(1 + 2^-L_{i-1})) / L_i`` computed directly to avoid
cancellation. Exact integer counts cross-check the first levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

EXACT_LIMIT_BITS = 64


@dataclass(frozen=True)
class LevelRecord:
    level: int
    log2_cardinality: float
    compression_factor: float | None
    excess: float | None  # C_i - 1
    receptive_field_size: int


@dataclass
class LocalityTrace:
    levels: list[LevelRecord]
    locality_estimate: float
    exact_levels: list[tuple[int, int]] = field(default_factory=list)  # (level, |S_i|) while |S_i| < 2^64

    def rows(self) -> list[dict]:
        return [
            {
                "level": r.level,
                "L": r.log2_cardinality,
                "C": r.compression_factor,
                "rfs": r.receptive_field_size,
            }
            for r in self.levels
        ]


def _log2_onep_pow2(neg_exp: float) -> float:
    """log2(1 + 2^-neg_exp), accurate for large arguments."""
    return math.log1p(2.0**-neg_exp) / math.log(2.0)


def pair_symbol_count(s: int) -> int:
    """s^2 - C(s, 2): ordered-free pairs of s symbols, including repeats."""
    return s * s - math.comb(s, 2)


def log2_int(v: int) -> float:
    """log2 of an arbitrarily large positive integer."""
    if v <= 0:
        raise ValueError("log2 of non-positive integer")
    shift = max(v.bit_length() - 60, 0)
    return shift + math.log2(v >> shift)


def trace_from_bits(l0: float, levels: int, exact_s0: int | None = None) -> LocalityTrace:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if not l0 > 0:
        raise ValueError("a single-symbol alphabet (L_0 = 0) has no defined compression factor")
    records = [LevelRecord(0, l0, None, None, 1)]
    L = l0
    for i in range(1, levels + 1):
        delta = _log2_onep_pow2(L)
        L_next = 2.0 * L - 1.0 + delta
        excess = (1.0 - delta) / L_next
        records.append(LevelRecord(i, L_next, 2.0 * L / L_next, excess, 2**i))
        L = L_next
    exact = []
    if exact_s0 is not None:
        s = exact_s0
        for i in range(levels + 1):
            if s >= 1 << EXACT_LIMIT_BITS:
                break
            exact.append((i, s))
            s = pair_symbol_count(s)
    return LocalityTrace(records, records[-1].excess, exact)


def trace_identity_locality(n: int, levels: int) -> LocalityTrace:
    """Trace symbol growth for n x n binary patches over ``levels`` levels."""
    if n < 1:
        raise ValueError("patch side must be >= 1")
    return trace_from_bits(float(n * n), levels, exact_s0=2 ** (n * n))


def asymptotic_factor(log2_s: float) -> float:
    """Large-s form of the compression factor, 2L / (2L - 1)."""
    return 2.0 * log2_s / (2.0 * log2_s - 1.0)


def limit_ratio(s: int) -> float:
    """(s + 1) / (2s + 1), the ratio whose limit 1/2 gives locality 0."""
    return (s + 1) / (2 * s + 1)


@dataclass
class ClosedFormReport:
    deviations: list[float]  # |C_i - 2L_{i-1}/(2L_{i-1} - 1)| per level
    ratios: list[tuple[int, float]]  # (s, (s+1)/(2s+1)) on exact levels
    converging: bool
    limit_locality: float

    def to_dict(self) -> dict:
        return {
            "deviations": self.deviations,
            "ratios": [[s, r] for s, r in self.ratios],
            "converging": self.converging,
            "limit_locality": self.limit_locality,
        }


def locality_closed_form_check(levels: int, n: int = 3) -> ClosedFormReport:
    if levels < 2:
        raise ValueError("levels must be >= 2")
    trace = trace_identity_locality(n, levels)
    recs = trace.levels
    deviations = [
        abs(cur.compression_factor - asymptotic_factor(prev.log2_cardinality)) for prev, cur in zip(recs, recs[1:])
    ]
    ratios = [(s, limit_ratio(s)) for _, s in trace.exact_levels]
    ratio_gaps = [abs(r - 0.5) for _, r in ratios]
    converging = all(b <= a for a, b in zip(deviations, deviations[1:])) and all(
        b < a for a, b in zip(ratio_gaps, ratio_gaps[1:])
    )
    # 2 * lim (s+1)/(2s+1) - 1
    return ClosedFormReport(deviations, ratios, converging, 2 * 0.5 - 1)
