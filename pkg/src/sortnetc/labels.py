"""Class rule of the identity task and its brute-force oracle."""

from __future__ import annotations

import enum
from collections import Counter
from typing import Hashable, Iterable


class Label(str, enum.Enum):
    ONE = "one"
    TWO = "two"


def required_multiplicity(c: int) -> int:
    """Smallest multiplicity that makes up at least half of ``c`` items."""
    return (c + 1) // 2


def label_for(max_multiplicity: int, c: int) -> Label:
    return Label.ONE if max_multiplicity >= required_multiplicity(c) else Label.TWO


def oracle_classify(patterns: Iterable[Hashable], c: int | None = None, min_count: int = 3) -> Label:
    """Ground truth by exact multiset multiplicity.

    ``patterns`` can be anything hashable with bit-exact equality (patches,
    byte strings, floats).
    """
    patterns = list(patterns)
    if c is None:
        c = len(patterns)
    if len(patterns) != c:
        raise ValueError(f"got {len(patterns)} patterns for c={c}")
    if c < min_count:
        raise ValueError(f"need at least {min_count} patterns, got {c}")
    return label_for(max(Counter(patterns).values()), c)
