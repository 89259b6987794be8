import logging
import random

import numpy as np
import pytest

from maskcut.dataset import (
    MANIFEST_HEADER,
    DatasetManifest,
    SampleRecord,
    allocate,
    preprocess_dataset,
    read_manifest,
    scan_dataset,
    split_dataset,
    write_manifest,
)
from maskcut.errors import EmptyDatasetError, LayoutError, NoFaceError, RatioError
from maskcut.facecut import CutOptions
from maskcut.images import save_image
from maskcut.landmarks import SidecarProvider, write_sidecar
from maskcut.synthetic import face_box, random_face_landmarks


def _tree(root, with_mask=3, without_mask=2):
    rng = np.random.default_rng(0)
    for label, n in (("with_mask", with_mask), ("without_mask", without_mask)):
        for i in range(n):
            save_image(root / label / f"{i}.png", rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
    return root


def _records(per_class: dict[str, int]):
    return [
        SampleRecord(f"/data/{label}/{i:05d}.png", label)
        for label, n in per_class.items()
        for i in range(n)
    ]


def test_scan_counts(tmp_path):
    manifest = scan_dataset(_tree(tmp_path))
    assert manifest.class_counts == {"with_mask": 3, "without_mask": 2}
    assert all(r.split == "" and r.face_found is None for r in manifest.records)


def test_scan_excludes_unreadable_file(tmp_path, caplog):
    _tree(tmp_path)
    (tmp_path / "with_mask" / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\n truncated")
    (tmp_path / "with_mask" / "notes.txt").write_text("ignored")
    with caplog.at_level(logging.WARNING):
        manifest = scan_dataset(tmp_path)
    assert manifest.class_counts == {"with_mask": 3, "without_mask": 2}
    assert "broken.png" in caplog.text


def test_scan_layout_errors(tmp_path):
    (tmp_path / "with_mask").mkdir()
    with pytest.raises(LayoutError):
        scan_dataset(tmp_path)
    (tmp_path / "without_mask").mkdir()
    with pytest.raises(EmptyDatasetError):
        scan_dataset(tmp_path)


@pytest.mark.parametrize(
    "n, expected", [(10, (6, 2, 2)), (7, (5, 1, 1)), (5, (3, 1, 1)), (1, (1, 0, 0)), (0, (0, 0, 0))]
)
def test_allocate(n, expected):
    assert allocate(n, (0.6, 0.2, 0.2)) == expected


@pytest.mark.parametrize("n", range(0, 60))
def test_allocate_within_one(n):
    for ratios in [(0.6, 0.2, 0.2), (0.7, 0.15, 0.15), (0.5, 0.25, 0.25), (0.0, 0.5, 0.5)]:
        sizes = allocate(n, ratios)
        assert sum(sizes) == n
        assert all(abs(s - n * r) <= 1 for s, r in zip(sizes, ratios))


def test_split_single_class_ten():
    manifest = DatasetManifest(_records({"with_mask": 10}))
    split = split_dataset(manifest, seed=42)
    assert split.split_counts()["with_mask"] == {"train": 6, "val": 2, "test": 2}
    again = split_dataset(manifest, seed=42)
    assert [r.split for r in split.records] == [r.split for r in again.records]


def test_split_is_order_independent_and_seed_sensitive():
    records = _records({"with_mask": 50, "without_mask": 40})
    a = split_dataset(DatasetManifest(records), seed=3)
    shuffled = records[:]
    random.Random(9).shuffle(shuffled)
    b = split_dataset(DatasetManifest(shuffled), seed=3)
    assert {r.path: r.split for r in a.records} == {r.path: r.split for r in b.records}
    c = split_dataset(DatasetManifest(records), seed=4)
    assert {r.path: r.split for r in a.records} != {r.path: r.split for r in c.records}
    # no leakage: each source exactly once
    assert sorted(r.source_path for r in a.records) == sorted(r.source_path for r in records)


@pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.7, 0.2, 0.2), (1.2, -0.1, -0.1)])
def test_split_ratio_errors(ratios):
    with pytest.raises(RatioError):
        split_dataset(DatasetManifest(_records({"with_mask": 3})), 0, ratios)


def test_split_drops_no_face_records_by_default():
    records = [
        SampleRecord("/o/a.png", "with_mask", face_found=True, source_path="/s/a.png"),
        SampleRecord("/o/b.png", "with_mask", face_found=False, source_path="/s/b.png"),
        SampleRecord("", "with_mask", face_found=False, source_path="/s/c.png"),
    ]
    assert len(split_dataset(DatasetManifest(records), 0).records) == 1
    assert len(split_dataset(DatasetManifest(records), 0, include_no_face=True).records) == 2


def test_manifest_roundtrip(tmp_path):
    records = _records({"with_mask": 4, "without_mask": 3})
    split = split_dataset(DatasetManifest(records), seed=7)
    path = tmp_path / "m.csv"
    write_manifest(split, path)
    assert path.read_text().splitlines()[0] == ",".join(MANIFEST_HEADER)
    loaded = read_manifest(path)
    assert loaded.records == split.records
    assert loaded.seed == 7 and loaded.ratios == (0.6, 0.2, 0.2)


def _sidecar_fixture(root, n_faces=4, n_blank=1):
    rng = np.random.default_rng(5)
    for i in range(n_faces + n_blank):
        label = "with_mask" if i % 2 else "without_mask"
        path = root / label / f"img{i}.png"
        save_image(path, rng.integers(1, 256, (64, 64, 3), dtype=np.uint8))
        if i < n_faces:
            lm = random_face_landmarks(rng)
            write_sidecar(path, [(face_box(lm), lm)])
    return root


def test_preprocess_skip(tmp_path):
    manifest = scan_dataset(_sidecar_fixture(tmp_path / "src"))
    derived = preprocess_dataset(manifest, tmp_path / "out", SidecarProvider())
    assert len(derived.records) == 5
    produced = [r for r in derived.records if r.has_file]
    assert len(produced) == 4
    assert all(r.face_found and r.landmark_source == "sidecar" for r in produced)
    skipped = [r for r in derived.records if not r.has_file]
    assert len(skipped) == 1 and skipped[0].face_found is False
    assert len(list((tmp_path / "out").rglob("*.png"))) == 4
    for r in produced:
        assert r.path.startswith(str(tmp_path / "out"))
        assert r.source_path.startswith(str(tmp_path / "src"))


def test_preprocess_passthrough(tmp_path):
    manifest = scan_dataset(_sidecar_fixture(tmp_path / "src"))
    derived = preprocess_dataset(
        manifest, tmp_path / "out", SidecarProvider(), CutOptions(no_face="passthrough")
    )
    assert len(list((tmp_path / "out").rglob("*.png"))) == 5
    assert sum(r.passthrough for r in derived.records) == 1


def test_preprocess_error_policy(tmp_path):
    manifest = scan_dataset(_sidecar_fixture(tmp_path / "src"))
    with pytest.raises(NoFaceError):
        preprocess_dataset(manifest, tmp_path / "out", SidecarProvider(), CutOptions(no_face="error"))


def test_preprocess_empty_manifest(tmp_path):
    derived = preprocess_dataset(DatasetManifest([]), tmp_path / "out", SidecarProvider())
    assert derived.records == []


def test_preprocess_parallel_matches_serial(tmp_path):
    manifest = scan_dataset(_sidecar_fixture(tmp_path / "src"))
    a = preprocess_dataset(manifest, tmp_path / "a", SidecarProvider())
    b = preprocess_dataset(manifest, tmp_path / "b", SidecarProvider(), workers=3)
    assert [r.source_path for r in a.records] == [r.source_path for r in b.records]
    from pathlib import Path

    for ra, rb in zip(a.records, b.records):
        assert ra.has_file == rb.has_file
        if ra.has_file:
            assert Path(ra.path).relative_to(tmp_path / "a") == Path(rb.path).relative_to(tmp_path / "b")
            assert Path(ra.path).read_bytes() == Path(rb.path).read_bytes()
