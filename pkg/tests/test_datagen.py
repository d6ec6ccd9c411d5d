import filecmp
import itertools
import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sortnetc.datagen import (
    DatasetConfig,
    InfeasibleConfig,
    PlacementError,
    generate_identity_dataset,
    generate_list_dataset,
    list_arrays,
    load_dataset,
    make_identity_image,
    read_list_csv,
    read_pgm,
    write_list_csv,
    write_pgm,
)
from sortnetc.labels import Label
from sortnetc.patchcodec import Patch


def same_tree(a, b):
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    return files_a == files_b and all((a / f).read_bytes() == (b / f).read_bytes() for f in files_a)


def label_from_pixels(img):
    patches = [img.pixels[p.row:p.row + p.patch.n, p.col:p.col + p.patch.n].tobytes() for p in img.patches]
    top = max(Counter(patches).values())
    return Label.ONE if 2 * top >= len(patches) else Label.TWO


def test_default_dataset_split_and_labels():
    ds = generate_identity_dataset(DatasetConfig(count=1000, seed=5))
    assert ds.label_counts() == {"one": 500, "two": 500}
    assert all(img.oracle_label() is img.label for img in ds.images)
    assert all(3 <= img.c <= 6 for img in ds.images)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(3, 8))
def test_non_overlap_and_label_soundness(seed, n, cmax):
    side = n * 4 + 8
    cfg = DatasetConfig(side, n, 3, cmax, 20, seed)
    try:
        cfg.validate()
    except InfeasibleConfig:
        return
    for img in generate_identity_dataset(cfg).images:
        for a, b in itertools.combinations(img.patches, 2):
            assert abs(a.row - b.row) >= n or abs(a.col - b.col) >= n
        assert label_from_pixels(img) is img.label
        if img.label is Label.TWO:
            assert len(set(p.patch for p in img.patches)) == img.c
        assert img.pixels.sum() == sum(sum(p.patch.bits) for p in img.patches)


def test_c3_two_identical_is_class_one():
    from sortnetc.labels import oracle_classify

    a, b = Patch(2, (1, 0, 0, 1)), Patch(2, (0, 0, 0, 1))
    assert oracle_classify([a, a, b]) is Label.ONE
    assert oracle_classify([a, b, Patch(2, (1, 1, 1, 1))]) is Label.TWO


def test_deterministic_bytes(tmp_path):
    cfg = DatasetConfig(count=200, seed=11)
    generate_identity_dataset(cfg).write(tmp_path / "a")
    generate_identity_dataset(cfg).write(tmp_path / "b")
    assert same_tree(tmp_path / "a", tmp_path / "b")


def test_parallel_equals_serial(tmp_path):
    cfg = DatasetConfig(count=101, seed=3)
    generate_identity_dataset(cfg, workers=1).write(tmp_path / "serial")
    generate_identity_dataset(cfg, workers=3).write(tmp_path / "parallel")
    assert same_tree(tmp_path / "serial", tmp_path / "parallel")


def test_seed_changes_output():
    a = generate_identity_dataset(DatasetConfig(count=10, seed=1))
    b = generate_identity_dataset(DatasetConfig(count=10, seed=2))
    assert any(not np.array_equal(x.pixels, y.pixels) for x, y in zip(a.images, b.images))


def test_sample_independent_of_count():
    small = generate_identity_dataset(DatasetConfig(count=5, seed=9))
    big = generate_identity_dataset(DatasetConfig(count=50, seed=9))
    for x, y in zip(small.images, big.images):
        assert np.array_equal(x.pixels, y.pixels)


def test_write_load_round_trip(tmp_path):
    ds = generate_identity_dataset(DatasetConfig(count=30, seed=4))
    ds.write(tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["generator"] == "numpy.PCG64+SeedSequence/v1"
    again = load_dataset(tmp_path)
    assert again.config == ds.config
    assert again.to_dict() == ds.to_dict()
    for x, y in zip(ds.images, again.images):
        assert np.array_equal(x.pixels, y.pixels)


def test_pgm_format(tmp_path):
    px = np.zeros((3, 5), dtype=np.uint8)
    px[1, 2] = 1
    write_pgm(tmp_path / "x.pgm", px)
    raw = (tmp_path / "x.pgm").read_bytes()
    assert raw.startswith(b"P5\n5 3\n255\n")
    assert raw[len(b"P5\n5 3\n255\n") + 7] == 255
    assert np.array_equal(read_pgm(tmp_path / "x.pgm"), px)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(image_side=8, patch_side=4, max_patches=6),
        dict(min_patches=2),
        dict(max_patches=2, min_patches=3),
        dict(patch_side=1, image_side=8, max_patches=3),  # only 2 distinct 1x1 patterns
        dict(count=0),
    ],
)
def test_infeasible_configs(kwargs):
    with pytest.raises(InfeasibleConfig):
        DatasetConfig(**kwargs).validate()


def test_placement_error():
    # four 4x4 patches fit in 8x8 only when aligned; a single attempt almost never does it
    cfg = DatasetConfig(image_side=8, patch_side=4, min_patches=4, max_patches=4, count=1, max_attempts=4)
    with pytest.raises(PlacementError):
        for i in range(50):
            make_identity_image(cfg, i)


# number lists


def test_list_balance():
    samples = generate_list_dataset(5000, 0)
    assert Counter(s.label for s in samples) == {Label.ONE: 2500, Label.TWO: 2500}


@given(st.integers(0, 2**32 - 1), st.booleans(), st.integers(1, 4))
def test_list_labels_match_oracle(seed, srt, cap):
    for s in generate_list_dataset(40, seed, srt, cap):
        top = s.max_multiplicity()
        assert (top >= 5) == (s.label is Label.ONE)
        if s.label is Label.TWO:
            assert top <= cap
        assert len(s.features) == 10
        assert sorted(s.features) == sorted(s.values)


def test_class_one_sorted_run():
    for s in generate_list_dataset(100, 1, sorted_output=True):
        if s.label is Label.ONE:
            f = s.features
            assert list(f) == sorted(f)
            best = max(sum(1 for _ in g) for _, g in itertools.groupby(f))
            assert best >= 5


def test_list_csv_round_trip(tmp_path):
    samples = generate_list_dataset(50, 2)
    write_list_csv(tmp_path / "l.csv", samples)
    header = (tmp_path / "l.csv").read_text().splitlines()[0]
    assert header == ",".join([f"v{i}" for i in range(10)] + ["label"])
    back = read_list_csv(tmp_path / "l.csv")
    assert [(s.values, s.label) for s in back] == [(s.values, s.label) for s in samples]


def test_list_arrays():
    X, y = list_arrays(generate_list_dataset(10, 0))
    assert X.shape == (10, 10) and y.tolist() == [1.0, 0.0] * 5


def test_list_determinism():
    assert generate_list_dataset(30, 8) == generate_list_dataset(30, 8)
