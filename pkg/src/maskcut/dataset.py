"""Class-per-directory datasets, face-cut preprocessing and stratified splits.

A dataset root holds one directory per class (``with_mask``,
``without_mask``). Manifests are CSV files with a fixed header; split seed
and ratios go in a ``.meta.json`` file next to the CSV.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DecodeError,
    EmptyDatasetError,
    InputError,
    LayoutError,
    RatioError,
)
from .facecut import CutOptions, cut_face, draw_overlay
from .images import is_image_file, load_image, save_image
from .landmarks import LandmarkProvider

log = logging.getLogger(__name__)

# Row order of the confusion matrix and class index of the classifier.
CLASS_NAMES = ("without_mask", "with_mask")
SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.6, 0.2, 0.2)
MANIFEST_HEADER = ("path", "label", "split", "face_found", "landmark_source", "source_path")
LANDMARK_SOURCES = ("predictor", "sidecar", "none")


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: str
    split: str = ""  # "" until split_dataset assigns one
    face_found: bool | None = None  # None: not preprocessed yet
    landmark_source: str = "none"
    source_path: str = ""

    def __post_init__(self):
        if self.label not in CLASS_NAMES:
            raise InputError(f"unknown label {self.label!r}")
        if self.split not in ("", *SPLITS):
            raise InputError(f"unknown split {self.split!r}")
        if self.landmark_source not in LANDMARK_SOURCES:
            raise InputError(f"unknown landmark source {self.landmark_source!r}")
        if not self.source_path:
            object.__setattr__(self, "source_path", self.path)

    @property
    def has_file(self) -> bool:
        return bool(self.path)

    @property
    def passthrough(self) -> bool:
        """Copied through unchanged because no face was found."""
        return self.face_found is False and self.has_file


@dataclass
class DatasetManifest:
    records: list[SampleRecord]
    seed: int | None = None
    ratios: tuple[float, float, float] | None = None
    root: str | None = field(default=None, compare=False)

    @property
    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in CLASS_NAMES}
        for r in self.records:
            counts[r.label] += 1
        return counts

    def split_counts(self) -> dict[str, dict[str, int]]:
        out = {label: {s: 0 for s in SPLITS} for label in CLASS_NAMES}
        for r in self.records:
            if r.split:
                out[r.label][r.split] += 1
        return out

    def subset(self, split: str) -> list[SampleRecord]:
        return [r for r in self.records if r.split == split]


# --------------------------------------------------------------------------
# manifest I/O


def _fmt_flag(value: bool | None) -> str:
    return "" if value is None else str(value).lower()


def _parse_flag(text: str) -> bool | None:
    text = text.strip().lower()
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    raise InputError(f"bad face_found value {text!r}")


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in manifest.records:
            writer.writerow(
                [r.path, r.label, r.split, _fmt_flag(r.face_found), r.landmark_source, r.source_path]
            )
    meta = {"seed": manifest.seed, "ratios": manifest.ratios, "root": manifest.root}
    _meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != MANIFEST_HEADER:
            raise InputError(f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}")
        records = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(MANIFEST_HEADER):
                raise InputError(f"{path}:{lineno}: expected {len(MANIFEST_HEADER)} columns")
            p, label, split, found, source, source_path = row
            records.append(SampleRecord(p, label, split, _parse_flag(found), source, source_path))
    manifest = DatasetManifest(records)
    meta = _meta_path(path)
    if meta.exists():
        data = json.loads(meta.read_text())
        manifest.seed = data.get("seed")
        manifest.ratios = tuple(data["ratios"]) if data.get("ratios") else None
        manifest.root = data.get("root")
    return manifest


# --------------------------------------------------------------------------
# scan


def _decodable(path: Path) -> bool:
    try:
        load_image(path)
    except DecodeError:
        return False
    return True


def scan_dataset(root: str | Path) -> DatasetManifest:
    root = Path(root)
    missing = [name for name in CLASS_NAMES if not (root / name).is_dir()]
    if missing:
        raise LayoutError(f"{root}: missing class directories {missing}")
    extra = sorted(
        p.name for p in root.iterdir() if p.is_dir() and p.name not in CLASS_NAMES
    )
    if extra:
        log.warning("%s: ignoring directories %s", root, extra)
    records = []
    for label in CLASS_NAMES:
        for path in sorted((root / label).rglob("*")):
            if not is_image_file(path):
                continue
            if not _decodable(path):
                log.warning("skipping undecodable image %s", path)
                continue
            records.append(SampleRecord(str(path), label))
    if not records:
        raise EmptyDatasetError(f"{root}: no decodable images")
    return DatasetManifest(records, root=str(root))


# --------------------------------------------------------------------------
# split


def validate_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise RatioError(f"need three ratios (train, val, test), got {len(ratios)}")
    if any(r < 0 or not math.isfinite(r) for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise RatioError(f"ratios must be non-negative and sum to 1, got {ratios}")
    return ratios


def allocate(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Split ``n`` items by ``ratios``.

    Each share starts at ``floor(n * ratio)``. Leftover items go to train
    first, then to the other shares by largest fractional part (val wins
    ties). No share receives more than one leftover, so every share ends
    within one item of ``n * ratio``.
    """
    quotas = [n * r for r in ratios]
    sizes = [math.floor(q + 1e-9) for q in quotas]
    frac = [q - s for q, s in zip(quotas, sizes)]
    order = sorted(range(3), key=lambda i: (i != 0, -frac[i], i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return tuple(sizes)


def split_dataset(
    manifest: DatasetManifest,
    seed: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    include_no_face: bool = False,
) -> DatasetManifest:
    """Stratified, seeded train/val/test assignment.

    Records are ordered by ``source_path`` before shuffling, so the on-disk or
    in-manifest order never changes the outcome. Records without a file, and
    by default records where no face was found, are dropped.
    """
    ratios = validate_ratios(ratios)
    eligible = [
        r
        for r in manifest.records
        if r.has_file and (r.face_found is not False or include_no_face)
    ]
    out: list[SampleRecord] = []
    for class_index, label in enumerate(CLASS_NAMES):
        group = sorted(
            (r for r in eligible if r.label == label), key=lambda r: (r.source_path, r.path)
        )
        rng = np.random.default_rng([seed, class_index])
        order = rng.permutation(len(group))
        n_train, n_val, _ = allocate(len(group), ratios)
        for rank, idx in enumerate(order):
            split = "train" if rank < n_train else "val" if rank < n_train + n_val else "test"
            out.append(replace(group[idx], split=split))
    out.sort(key=lambda r: (r.source_path, r.path))
    return DatasetManifest(out, seed=seed, ratios=ratios, root=manifest.root)


# --------------------------------------------------------------------------
# preprocess


def _output_stem(record: SampleRecord, root: Path | None) -> Path:
    src = Path(record.source_path)
    if root is not None:
        try:
            return src.relative_to(root).with_suffix("")
        except ValueError:
            pass
    return Path(record.label) / src.stem


def _process_one(
    record: SampleRecord,
    output_dir: Path,
    root: Path | None,
    provider: LandmarkProvider,
    options: CutOptions,
    debug_dir: Path | None = None,
) -> list[SampleRecord]:
    src = Path(record.source_path)
    image = load_image(src)
    cuts = cut_face(image, provider, options, image_path=src)
    stem = _output_stem(record, root)
    if debug_dir is not None and cuts:
        overlay = image
        for cut in cuts:
            overlay = draw_overlay(overlay, cut.boundary, cut.box)
        save_image(debug_dir / stem.parent / f"{stem.name}.png", overlay)
    if not cuts:
        if options.no_face == "passthrough":
            dest = (output_dir / stem).with_suffix(src.suffix)
            dest.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, dest)
            return [replace(record, path=str(dest), face_found=False, landmark_source="none")]
        return [replace(record, path="", face_found=False, landmark_source="none")]
    out = []
    for i, cut in enumerate(cuts):
        suffix = "" if len(cuts) == 1 and options.faces == "largest" else f"_face{i}"
        dest = output_dir / stem.parent / f"{stem.name}{suffix}.png"
        save_image(dest, cut.pixels)
        out.append(
            replace(record, path=str(dest), face_found=True, landmark_source=provider.source)
        )
    return out


def preprocess_dataset(
    manifest: DatasetManifest,
    output_dir: str | Path,
    provider: LandmarkProvider,
    options: CutOptions | None = None,
    workers: int = 1,
    debug_dir: str | Path | None = None,
) -> DatasetManifest:
    """Run the face cut over every record and write a mirrored tree of PNGs.

    Sources are never modified. Splits already present are carried over.
    With ``debug_dir`` the boundary markers are also drawn over each source
    image and saved there.
    """
    options = options or CutOptions()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    root = Path(manifest.root) if manifest.root else None
    if root is not None and output_dir.resolve() == root.resolve():
        raise InputError("output directory must differ from the dataset root")

    debug_dir = Path(debug_dir) if debug_dir is not None else None

    def work(record):
        return _process_one(record, output_dir, root, provider, options, debug_dir)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, manifest.records))
    else:
        results = [work(r) for r in manifest.records]
    records = [r for group in results for r in group]
    found = sum(1 for r in records if r.face_found)
    log.info("face cut: %d outputs from %d inputs", found, len(manifest.records))
    return DatasetManifest(records, manifest.seed, manifest.ratios, root=str(output_dir))
