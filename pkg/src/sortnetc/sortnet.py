"""Sorting networks: construction, simulation and zero-one verification.

Convention: every network sorts ascending. After a comparator ``(lo, hi)``
runs, wire ``lo`` carries the smaller value and wire ``hi`` the larger.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_ZERO_ONE_CAP = 22
RANDOMIZED_VECTORS = 100_000


class UnsupportedSize(ValueError):
    pass


class TooManyWires(ValueError):
    pass


class Comparator(NamedTuple):
    lo: int
    hi: int


@dataclass(frozen=True)
class SortingNetwork:
    wires: int
    layers: tuple[tuple[Comparator, ...], ...]

    def __post_init__(self) -> None:
        if self.wires < 1:
            raise ValueError(f"wires must be positive, got {self.wires}")
        if not self.layers:
            raise ValueError("a sorting network needs at least one layer")
        layers = tuple(tuple(Comparator(int(lo), int(hi)) for lo, hi in layer) for layer in self.layers)
        for depth, layer in enumerate(layers):
            seen: set[int] = set()
            for c in layer:
                if not 0 <= c.lo < c.hi < self.wires:
                    raise ValueError(f"invalid comparator {tuple(c)} in layer {depth} for {self.wires} wires")
                if c.lo in seen or c.hi in seen:
                    raise ValueError(f"wire reused within layer {depth}: {tuple(c)}")
                seen.update(c)
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def size(self) -> int:
        """Total number of comparators."""
        return sum(len(layer) for layer in self.layers)

    def comparators(self) -> list[Comparator]:
        return [c for layer in self.layers for c in layer]

    def to_dict(self) -> dict:
        return {"wires": self.wires, "layers": [[[c.lo, c.hi] for c in layer] for layer in self.layers]}

    @classmethod
    def from_dict(cls, data: dict) -> SortingNetwork:
        return cls(int(data["wires"]), tuple(tuple(Comparator(lo, hi) for lo, hi in layer) for layer in data["layers"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> SortingNetwork:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _network(wires: int, layers: Iterable[Iterable[tuple[int, int]]]) -> SortingNetwork:
    return SortingNetwork(wires, tuple(tuple(Comparator(*c) for c in layer) for layer in layers))


_OPTIMAL = {
    2: [[(0, 1)]],
    3: [[(0, 1)], [(1, 2)], [(0, 1)]],
    4: [[(0, 2), (1, 3)], [(0, 1), (2, 3)], [(1, 2)]],
}


def make_optimal_small(x: int) -> SortingNetwork:
    """Hardcoded minimal networks for 2, 3 and 4 wires."""
    if x not in _OPTIMAL:
        raise UnsupportedSize(f"no hardcoded optimal network for {x} wires (supported: 2, 3, 4)")
    return _network(x, _OPTIMAL[x])


def _batcher_comparators(n: int) -> list[tuple[int, int]]:
    # Odd-even merge sort for arbitrary n: comparators of the next power of two
    # that touch wires >= n are dropped (those wires would carry +inf).
    comps = []
    p = 1
    while p < n:
        k = p
        while k >= 1:
            for j in range(k % p, n - k, 2 * k):
                for i in range(min(k - 1, n - j - k - 1) + 1):
                    if (i + j) // (2 * p) == (i + j + k) // (2 * p):
                        comps.append((i + j, i + j + k))
            k //= 2
        p *= 2
    return comps


def layer_greedily(wires: int, comparators: Sequence[tuple[int, int]]) -> SortingNetwork:
    """Pack a comparator sequence into the earliest layer each one can occupy.

    Relative order of comparators sharing a wire is preserved, so the layered
    network computes the same function as the sequence.
    """
    ready = [0] * wires
    layers: list[list[tuple[int, int]]] = []
    for lo, hi in comparators:
        slot = max(ready[lo], ready[hi])
        if slot == len(layers):
            layers.append([])
        layers[slot].append((lo, hi))
        ready[lo] = ready[hi] = slot + 1
    return _network(wires, layers or [[]])


def make_merge_network(x: int) -> SortingNetwork:
    """Batcher odd-even merge sorting network, depth O(log^2 x)."""
    if x < 2:
        raise ValueError(f"need at least 2 wires, got {x}")
    return layer_greedily(x, _batcher_comparators(x))


def make_brick_network(x: int) -> SortingNetwork:
    """Two-layer odd-even transposition network; x applications sort x values."""
    if x < 2:
        raise ValueError(f"need at least 2 wires, got {x}")
    first = [(i, i + 1) for i in range(0, x - 1, 2)]
    second = [(i, i + 1) for i in range(1, x - 1, 2)]
    return _network(x, [first, second])


def repeat(net: SortingNetwork, times: int) -> SortingNetwork:
    """The network obtained by feeding ``net`` its own output ``times`` times."""
    if times < 1:
        raise ValueError("times must be >= 1")
    return SortingNetwork(net.wires, net.layers * times)


def apply(net: SortingNetwork, values: Sequence[float]) -> list[float]:
    if len(values) != net.wires:
        raise ValueError(f"length mismatch: network has {net.wires} wires, got {len(values)} values")
    out = list(values)
    for layer in net.layers:
        for lo, hi in layer:
            if out[lo] > out[hi]:
                out[lo], out[hi] = out[hi], out[lo]
    return out


def apply_trace(net: SortingNetwork, values: Sequence[float]) -> list[list[float]]:
    """Wire values after every layer, starting with the input itself."""
    states = [list(values)]
    for layer in net.layers:
        states.append(apply(SortingNetwork(net.wires, (layer,)), states[-1]))
    return states


def apply_batch(net: SortingNetwork, values: np.ndarray) -> np.ndarray:
    """Vectorised :func:`apply` over the rows of a 2-D array."""
    out = np.array(values, copy=True)
    if out.ndim != 2 or out.shape[1] != net.wires:
        raise ValueError(f"expected shape (m, {net.wires}), got {out.shape}")
    for layer in net.layers:
        for lo, hi in layer:
            a, b = out[:, lo].copy(), out[:, hi]
            out[:, lo] = np.minimum(a, b)
            out[:, hi] = np.maximum(a, b)
    return out


@dataclass
class VerificationReport:
    passed: bool
    vectors_tested: int
    counterexample: tuple[int, ...] | None = None
    probabilistic: bool = False
    wires: int = 0

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "vectors_tested": self.vectors_tested,
            "counterexample": list(self.counterexample) if self.counterexample is not None else None,
            "probabilistic": self.probabilistic,
            "wires": self.wires,
        }


def _bitsliced_inputs(wires: int) -> list[np.ndarray]:
    # Wire i of binary vector v is bit i of v; vectors are packed 8 per byte.
    v = np.arange(1 << wires, dtype=np.uint32)
    return [np.packbits(((v >> i) & 1).astype(np.uint8)) for i in range(wires)]


def verify_zero_one(
    net: SortingNetwork,
    cap: int = DEFAULT_ZERO_ONE_CAP,
    randomized: bool = False,
    seed: int = 0,
) -> VerificationReport:
    """Check the sorting property on every binary input vector.

    Networks wider than ``cap`` raise :class:`TooManyWires` unless
    ``randomized`` is set, in which case 100k random binary vectors are
    tried and the report is flagged probabilistic.
    """
    x = net.wires
    if x > cap:
        if not randomized:
            raise TooManyWires(f"{x} wires exceeds exhaustive cap of {cap}")
        rng = np.random.default_rng(seed)
        vectors = rng.integers(0, 2, size=(RANDOMIZED_VECTORS, x), dtype=np.uint8)
        out = apply_batch(net, vectors)
        bad = np.flatnonzero((out[:, :-1] > out[:, 1:]).any(axis=1))
        cex = tuple(int(b) for b in vectors[bad[0]]) if bad.size else None
        return VerificationReport(cex is None, RANDOMIZED_VECTORS, cex, probabilistic=True, wires=x)

    w = _bitsliced_inputs(x)
    for layer in net.layers:
        for lo, hi in layer:
            w[lo], w[hi] = w[lo] & w[hi], w[lo] | w[hi]
    failing = np.zeros_like(w[0])
    for i in range(x - 1):
        failing |= w[i] & ~w[i + 1]
    bits = np.unpackbits(failing)
    cex = None
    if bits.any():
        v = int(np.argmax(bits))
        cex = tuple((v >> i) & 1 for i in range(x))
    return VerificationReport(cex is None, 1 << x, cex, wires=x)


@dataclass(frozen=True)
class DepthBound:
    info_theoretic: float
    kahale: float
    chosen_depth: int


KAHALE_CONSTANT = 3.27


def depth_bounds(x: int) -> DepthBound:
    """Lower bounds on sorting-network depth for x inputs."""
    if x < 2:
        raise ValueError(f"need at least 2 inputs, got {x}")
    info = math.log2(x)
    # ceil of log2 via integer arithmetic avoids float edge cases at powers of two
    chosen = (x - 1).bit_length()
    return DepthBound(info, KAHALE_CONSTANT * info, chosen)
