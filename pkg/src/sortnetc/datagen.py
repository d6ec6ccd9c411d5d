"""Identity-task images and number-list datasets.

Labels are chosen first and a conforming sample is then built for them, so
both classes stay reachable for any patch size. Each sample ``i`` draws from
its own stream ``substream(seed, i)``; output does not depend on the order or
parallelism of generation.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .labels import Label, label_for, oracle_classify, required_multiplicity
from .patchcodec import Patch
from .rng import GENERATOR, substream

LIST_LENGTH = 10
LIST_THRESHOLD = 5
DEFAULT_MAX_REPEAT_TWO = 3


class InfeasibleConfig(ValueError):
    pass


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    image_side: int = 32
    patch_side: int = 4
    min_patches: int = 3
    max_patches: int = 6
    count: int = 1000
    seed: int = 0
    balanced: bool = True
    max_attempts: int = 1000

    def validate(self) -> None:
        N, n = self.image_side, self.patch_side
        if n < 1 or N < n:
            raise InfeasibleConfig(f"need image_side >= patch_side >= 1, got N={N}, n={n}")
        if self.min_patches < 3:
            raise InfeasibleConfig("min_patches must be >= 3")
        if self.max_patches < self.min_patches:
            raise InfeasibleConfig("max_patches must be >= min_patches")
        if n * math.ceil(math.sqrt(self.max_patches)) > N:
            raise InfeasibleConfig(f"{self.max_patches} patches of side {n} cannot be placed on a {N}x{N} image")
        if 2 ** (n * n) < self.max_patches:
            raise InfeasibleConfig(f"only {2 ** (n * n)} distinct {n}x{n} patterns, need {self.max_patches}")
        if self.count < 1:
            raise InfeasibleConfig("count must be >= 1")
        if self.seed < 0:
            raise InfeasibleConfig("seed must be non-negative")


@dataclass(frozen=True)
class PlacedPatch:
    row: int
    col: int
    patch: Patch


@dataclass
class IdentityImage:
    pixels: np.ndarray
    patches: list[PlacedPatch]
    label: Label

    @property
    def c(self) -> int:
        return len(self.patches)

    @property
    def image_side(self) -> int:
        return self.pixels.shape[0]

    def oracle_label(self) -> Label:
        return oracle_classify([p.patch for p in self.patches])


def _random_pattern(rng: np.random.Generator, n: int) -> Patch:
    return Patch(n, tuple(rng.integers(0, 2, n * n).tolist()))


def _patterns_for(label: Label, c: int, n: int, rng: np.random.Generator) -> list[Patch]:
    if label is Label.ONE:
        k = int(rng.integers(required_multiplicity(c), c + 1))
        base = _random_pattern(rng, n)
        patterns = [base] * k + [_random_pattern(rng, n) for _ in range(c - k)]
        order = rng.permutation(c)
        return [patterns[i] for i in order]
    patterns: list[Patch] = []
    while len(patterns) < c:
        p = _random_pattern(rng, n)
        if p not in patterns:
            patterns.append(p)
    return patterns


def _place(cfg: DatasetConfig, c: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    N, n = cfg.image_side, cfg.patch_side
    attempts = 0
    positions: list[tuple[int, int]] = []
    while len(positions) < c:
        if attempts >= cfg.max_attempts:
            raise PlacementError(f"could not place {c} patches in {cfg.max_attempts} attempts")
        attempts += 1
        r, col = (int(v) for v in rng.integers(0, N - n + 1, 2))
        if all(abs(r - pr) >= n or abs(col - pc) >= n for pr, pc in positions):
            positions.append((r, col))
    return positions


def make_identity_image(cfg: DatasetConfig, index: int) -> IdentityImage:
    rng = substream(cfg.seed, index)
    if cfg.balanced:
        label = Label.ONE if index % 2 == 0 else Label.TWO
    else:
        label = Label.ONE if rng.random() < 0.5 else Label.TWO
    c = int(rng.integers(cfg.min_patches, cfg.max_patches + 1))
    n = cfg.patch_side
    patterns = _patterns_for(label, c, n, rng)
    positions = _place(cfg, c, rng)
    pixels = np.zeros((cfg.image_side, cfg.image_side), dtype=np.uint8)
    placed = []
    for (r, col), p in zip(positions, patterns):
        pixels[r:r + n, col:col + n] = p.to_array()
        placed.append(PlacedPatch(r, col, p))
    img = IdentityImage(pixels, placed, label)
    if img.oracle_label() is not label:
        raise AssertionError(f"sample {index}: constructed label {label} disagrees with oracle")
    return img


def _make_chunk(args: tuple[DatasetConfig, Sequence[int]]) -> list[IdentityImage]:
    cfg, indices = args
    return [make_identity_image(cfg, i) for i in indices]


@dataclass
class DatasetManifest:
    config: DatasetConfig
    images: list[IdentityImage] = field(default_factory=list)

    def label_counts(self) -> dict[str, int]:
        counts = {l.value: 0 for l in Label}
        for img in self.images:
            counts[img.label.value] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "generator": GENERATOR,
            "config": asdict(self.config),
            "images": [
                {
                    "file": f"images/{i:06d}.pgm",
                    "label": img.label.value,
                    "c": img.c,
                    "patches": [{"row": p.row, "col": p.col, "pattern": p.patch.to_ascii().split("\n")} for p in img.patches],
                }
                for i, img in enumerate(self.images)
            ],
        }

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        (out / "images").mkdir(parents=True, exist_ok=True)
        manifest = self.to_dict()
        for entry, img in zip(manifest["images"], self.images):
            write_pgm(out / entry["file"], img.pixels)
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        return path


def generate_identity_dataset(cfg: DatasetConfig, workers: int = 1) -> DatasetManifest:
    cfg.validate()
    indices = list(range(cfg.count))
    if workers <= 1:
        images = _make_chunk((cfg, indices))
    else:
        chunks = [(cfg, indices[i::workers]) for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_make_chunk, chunks))
        images = [None] * cfg.count
        for w, part in enumerate(parts):
            images[w::workers] = part
    return DatasetManifest(cfg, images)


def load_dataset(directory: str | Path) -> DatasetManifest:
    """Rebuild a dataset from its manifest and PGM files."""
    root = Path(directory)
    data = json.loads((root / "manifest.json").read_text())
    cfg = DatasetConfig(**data["config"])
    images = []
    for entry in data["images"]:
        pixels = read_pgm(root / entry["file"])
        placed = [PlacedPatch(p["row"], p["col"], Patch.from_ascii("\n".join(p["pattern"]))) for p in entry["patches"]]
        images.append(IdentityImage(pixels, placed, Label(entry["label"])))
    return DatasetManifest(cfg, images)


def write_pgm(path: str | Path, pixels: np.ndarray) -> None:
    """Binary PGM (P5, maxval 255); set pixels become 255."""
    pixels = np.asarray(pixels)
    h, w = pixels.shape
    body = (pixels.astype(np.uint8) * 255).tobytes()
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + body)


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P5 PGM written by :func:`write_pgm` back to a 0/1 array."""
    raw = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    data = np.frombuffer(raw[pos + 1:pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return (data > maxval // 2).astype(np.uint8)


# -- number lists -----------------------------------------------------------


@dataclass(frozen=True)
class NumberListSample:
    values: tuple[float, ...]
    label: Label
    sorted_output: bool = False

    @property
    def features(self) -> tuple[float, ...]:
        """The view consumers train on."""
        return self.sorted_view if self.sorted_output else self.values

    @property
    def sorted_view(self) -> tuple[float, ...]:
        return tuple(sorted(self.values))

    def max_multiplicity(self) -> int:
        counts: dict[float, int] = {}
        for v in self.values:
            counts[v] = counts.get(v, 0) + 1
        return max(counts.values())


def make_list_sample(seed: int, index: int, sorted_output: bool = False, max_repeat_two: int = DEFAULT_MAX_REPEAT_TWO) -> NumberListSample:
    """One balanced-by-index sample.

    Class one repeats a value 5..10 times; class two repeats one value
    1..``max_repeat_two`` times (1 means all values distinct).
    """
    if not 1 <= max_repeat_two < LIST_THRESHOLD:
        raise ValueError(f"max_repeat_two must be in 1..{LIST_THRESHOLD - 1}")
    rng = substream(seed, index)
    label = Label.ONE if index % 2 == 0 else Label.TWO
    if label is Label.ONE:
        k = int(rng.integers(LIST_THRESHOLD, LIST_LENGTH + 1))
    else:
        k = int(rng.integers(1, max_repeat_two + 1))
    while True:
        base = float(rng.random())
        rest = rng.random(LIST_LENGTH - k).tolist()
        values = [base] * k + rest
        values = [values[i] for i in rng.permutation(LIST_LENGTH)]
        sample = NumberListSample(tuple(values), label, sorted_output)
        # resample if an accidental tie moved the sample across the threshold
        if label_for(sample.max_multiplicity(), LIST_LENGTH) is label and len(set(rest) | {base}) == len(rest) + 1:
            return sample


def generate_list_dataset(
    count: int, seed: int, sorted_output: bool = False, max_repeat_two: int = DEFAULT_MAX_REPEAT_TWO
) -> list[NumberListSample]:
    if count < 1:
        raise ValueError("count must be >= 1")
    return [make_list_sample(seed, i, sorted_output, max_repeat_two) for i in range(count)]


def list_arrays(samples: Iterable[NumberListSample]) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and 0/1 targets, 1 for class one."""
    samples = list(samples)
    X = np.array([s.features for s in samples], dtype=np.float64)
    y = np.array([1.0 if s.label is Label.ONE else 0.0 for s in samples])
    return X, y


def write_list_csv(path: str | Path, samples: Iterable[NumberListSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"v{i}" for i in range(LIST_LENGTH)] + ["label"])
        for s in samples:
            w.writerow([repr(v) for v in s.features] + [s.label.value])


def read_list_csv(path: str | Path) -> list[NumberListSample]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return [NumberListSample(tuple(float(v) for v in r[:-1]), Label(r[-1])) for r in rows[1:]]
