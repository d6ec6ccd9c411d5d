"""Binary patch <-> single real number codec.

A patch of side ``n`` is read row-major into the bits ``b_1 .. b_{n^2}`` and
mapped to ``sum b_i 2^-i``, i.e. the kernel with weights ``w_i = 2^-i``. The
code is held as the integer bit-pack ``sum b_i 2^(n^2 - i)``; the real value
is ``pack / 2^(n^2)``. A finite mantissa keeps only the leading
``mantissa_bits`` bits of the pack (truncation, no rounding).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

EXHAUSTIVE_BITS_CAP = 26
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Patch:
    n: int
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"patch side must be >= 1, got {self.n}")
        bits = tuple(int(b) for b in np.asarray(self.bits).ravel())
        if len(bits) != self.n * self.n:
            raise ValueError(f"expected {self.n * self.n} bits, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("patch entries must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_array(cls, arr) -> Patch:
        arr = np.asarray(arr)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"patch must be square, got shape {arr.shape}")
        return cls(arr.shape[0], tuple(arr.ravel()))

    @classmethod
    def from_pack(cls, n: int, pack: int) -> Patch:
        nb = n * n
        return cls(n, tuple((pack >> (nb - 1 - i)) & 1 for i in range(nb)))

    @classmethod
    def from_ascii(cls, text: str) -> Patch:
        rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
        return cls.from_array([[int(ch) for ch in r] for r in rows])

    def to_ascii(self) -> str:
        return "\n".join("".join(str(b) for b in self.bits[r * self.n:(r + 1) * self.n]) for r in range(self.n))

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8).reshape(self.n, self.n)

    @property
    def pack(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v


@dataclass(frozen=True)
class PrecisionModel:
    """Mantissa budget; ``None`` means exact."""

    mantissa_bits: int | None = None

    def __post_init__(self) -> None:
        if self.mantissa_bits is not None and self.mantissa_bits < 1:
            raise ValueError("mantissa_bits must be >= 1")

    @property
    def exact(self) -> bool:
        return self.mantissa_bits is None

    def kept_bits(self, nbits: int) -> int:
        return nbits if self.exact else min(nbits, self.mantissa_bits)

    def lossless_for(self, n: int) -> bool:
        return self.exact or n * n <= self.mantissa_bits

    @classmethod
    def parse(cls, text: str | int) -> PrecisionModel:
        if str(text).lower() == "exact":
            return EXACT
        return cls(int(text))

    def __str__(self) -> str:
        return "exact" if self.exact else str(self.mantissa_bits)


EXACT = PrecisionModel(None)
FLOAT32 = PrecisionModel(24)
FLOAT64 = PrecisionModel(53)


def _truncate(pack: int, nbits: int, precision: PrecisionModel) -> int:
    drop = nbits - precision.kept_bits(nbits)
    return (pack >> drop) << drop


@dataclass(frozen=True)
class PatchCode:
    pack: int
    n: int
    precision: PrecisionModel = EXACT

    @property
    def nbits(self) -> int:
        return self.n * self.n

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.pack, 1 << self.nbits)

    @property
    def value(self) -> float:
        # int / int true division is correctly rounded
        return self.pack / (1 << self.nbits)

    @property
    def lossy(self) -> bool:
        return not self.precision.lossless_for(self.n)

    def __float__(self) -> float:
        return self.value


class Decoded(NamedTuple):
    patch: Patch
    lossy: bool


def encode(patch: Patch, precision: PrecisionModel = EXACT) -> PatchCode:
    return PatchCode(_truncate(patch.pack, patch.n * patch.n, precision), patch.n, precision)


def decode(code: PatchCode) -> Decoded:
    """Recover the patch; bits beyond the mantissa come back as zeros."""
    return Decoded(Patch.from_pack(code.n, code.pack), code.lossy)


def kernel_weights(n: int) -> np.ndarray:
    """The n x n kernel with w_i = 2^-i in row-major order."""
    return np.ldexp(1.0, -np.arange(1, n * n + 1)).reshape(n, n)


def encode_dot(patch: Patch) -> float:
    """Code computed as a convolution-style dot product (float64)."""
    return float(np.sum(patch.to_array() * kernel_weights(patch.n)))


def encode_packs(packs: np.ndarray, n: int, precision: PrecisionModel = EXACT) -> np.ndarray:
    """Vectorised integer encoding of many bit-packs (n^2 <= 63)."""
    nbits = n * n
    if nbits > 63:
        raise ValueError("vectorised encoding limited to 63-bit packs")
    drop = np.uint64(nbits - precision.kept_bits(nbits))
    packs = np.asarray(packs, dtype=np.uint64)
    return (packs >> drop) << drop


class Collision(NamedTuple):
    first: Patch
    second: Patch


def find_collision(n: int, precision: PrecisionModel, cap: int = EXHAUSTIVE_BITS_CAP) -> Collision | None:
    """Enumerate all 2^(n^2) patches and return two with the same code, if any."""
    nbits = n * n
    if nbits > cap:
        raise ValueError(f"{nbits}-bit patches exceed the exhaustive enumeration cap of {cap} bits")
    total = 1 << nbits
    seen = np.zeros(total, dtype=bool)  # codes are bit-packs, so they index [0, 2^nbits)

    def chunks():
        for start in range(0, total, _CHUNK):
            packs = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
            yield start, encode_packs(packs, n, precision)

    for start, codes in chunks():
        uniq, first_idx, counts = np.unique(codes, return_index=True, return_counts=True)
        dup = np.flatnonzero(counts > 1)
        if dup.size:
            a, b = np.flatnonzero(codes == uniq[dup[0]])[:2]
            return Collision(Patch.from_pack(n, start + int(a)), Patch.from_pack(n, start + int(b)))
        hits = np.flatnonzero(seen[uniq])
        if hits.size:
            code = uniq[hits[0]]
            second = start + int(first_idx[hits[0]])
            for earlier, old in chunks():
                match = np.flatnonzero(old == code)
                if match.size:
                    return Collision(Patch.from_pack(n, earlier + int(match[0])), Patch.from_pack(n, second))
        seen[uniq] = True
    return None


def codes_injective(n: int, precision: PrecisionModel, cap: int = EXHAUSTIVE_BITS_CAP) -> bool:
    return find_collision(n, precision, cap) is None
