"""Identity-task classifier: attend, encode, sort with a compiled ReLU net, scan.

Patches are cut from the image at their known positions, encoded to one real
each, sorted by the exact neural sorter and scanned for runs of equal
neighbours. A sorter is compiled once per width; images with fewer patches
pad the free inputs with 0. The number of padded slots is the occupancy mask:
padding zeros sort to the front and are subtracted from the zero run, so
all-zero patches (code 0) are still counted correctly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datagen import IdentityImage
from .labels import Label, label_for, oracle_classify
from .nncompiler import compile_network
from .nnruntime import DenseNetwork
from .patchcodec import FLOAT32, Patch, PrecisionModel, encode
from .sortnet import make_merge_network

__all__ = ["PipelineVerdict", "classify_image", "classify_batch", "oracle_classify", "sorter_for", "PrecisionInsufficient"]


class PrecisionInsufficient(ValueError):
    pass


class PositionOutOfBounds(ValueError):
    pass


@dataclass
class PipelineVerdict:
    predicted_class: Label
    sorted_codes: list[float]
    max_run_length: int
    patch_count: int

    def to_dict(self) -> dict:
        return {
            "predicted_class": self.predicted_class.value,
            "sorted_codes": self.sorted_codes,
            "max_run_length": self.max_run_length,
            "patch_count": self.patch_count,
        }


@functools.lru_cache(maxsize=None)
def sorter_for(width: int) -> DenseNetwork:
    return compile_network(make_merge_network(width))


def extract_patches(img: IdentityImage) -> list[Patch]:
    N = img.image_side
    out = []
    for placed in img.patches:
        n = placed.patch.n
        if not (0 <= placed.row <= N - n and 0 <= placed.col <= N - n):
            raise PositionOutOfBounds(f"patch at ({placed.row}, {placed.col}) exceeds {N}x{N} image")
        out.append(Patch.from_array(img.pixels[placed.row:placed.row + n, placed.col:placed.col + n]))
    return out


def _codes(img: IdentityImage, precision: PrecisionModel) -> list[float]:
    patches = extract_patches(img)
    n = patches[0].n
    if not precision.lossless_for(n) or n * n > 53:
        raise PrecisionInsufficient(f"{n}x{n} patches need {n * n} bits, precision has {precision}")
    return [encode(p, precision).value for p in patches]


def longest_run(sorted_values: Sequence[float], padding: int = 0) -> int:
    """Longest run of equal adjacent values, ignoring ``padding`` leading zeros."""
    best, run = 0, 0
    prev = None
    for v in sorted_values:
        run = run + 1 if v == prev else 1
        prev = v
        best = max(best, run - (padding if v == 0.0 else 0))
    return best


def _verdict(sorted_row: np.ndarray, c: int) -> PipelineVerdict:
    padding = len(sorted_row) - c
    run = longest_run(sorted_row.tolist(), padding)
    return PipelineVerdict(label_for(run, c), sorted_row[padding:].tolist(), run, c)


def classify_batch(images: Sequence[IdentityImage], precision: PrecisionModel = FLOAT32, width: int | None = None) -> list[PipelineVerdict]:
    """Classify many images with one pass through a shared sorter."""
    if not images:
        return []
    width = width or max(img.c for img in images)
    rows = np.zeros((len(images), width))
    for i, img in enumerate(images):
        if img.c > width:
            raise ValueError(f"image has {img.c} patches but sorter width is {width}")
        rows[i, :img.c] = _codes(img, precision)
    sorted_rows = sorter_for(width).forward(rows)
    return [_verdict(row, img.c) for row, img in zip(sorted_rows, images)]


def classify_image(img: IdentityImage, precision: PrecisionModel = FLOAT32, width: int | None = None) -> PipelineVerdict:
    return classify_batch([img], precision, width)[0]
