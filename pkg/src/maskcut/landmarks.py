"""68-point facial landmarks from a pretrained predictor or from sidecar files.

Both providers satisfy :class:`LandmarkProvider`; consumers never need to know
which one produced a :class:`LandmarkSet`.

Sidecar format (``<image-stem>.landmarks.txt`` next to the image), one block
per face::

    facebox left top right bottom
    0 x y
    1 x y
    ...
    67 x y
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import AnnotationFormatError, ProviderInitError
from .images import check_rgb

log = logging.getLogger(__name__)

NUM_LANDMARKS = 68
PREDICTOR_ENV = "FACECUT_PREDICTOR_PATH"
SIDECAR_SUFFIX = ".landmarks.txt"

# 0-based, half-open; together they tile 0..67.
REGIONS: dict[str, range] = {
    "jaw": range(0, 17),
    "right_brow": range(17, 22),
    "left_brow": range(22, 27),
    "nose": range(27, 36),
    "right_eye": range(36, 42),
    "left_eye": range(42, 48),
    "mouth": range(48, 61),
    "lips": range(61, 68),
}


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float


@dataclass(frozen=True)
class FaceBox:
    left: float
    top: float
    right: float
    bottom: float

    def __post_init__(self):
        if not (self.left < self.right and self.top < self.bottom):
            raise AnnotationFormatError(f"invalid face box {self}")

    @property
    def area(self) -> float:
        return (self.right - self.left) * (self.bottom - self.top)


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    points: np.ndarray  # (68, 2) float64, columns x, y
    source: str = "sidecar"

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.shape != (NUM_LANDMARKS, 2):
            raise AnnotationFormatError(
                f"expected {NUM_LANDMARKS} landmarks, got array of shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise AnnotationFormatError("landmark coordinates must be finite")
        if self.source not in ("predictor", "sidecar"):
            raise ValueError(f"unknown landmark source {self.source!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return NUM_LANDMARKS

    def __getitem__(self, index: int) -> Point2D:
        x, y = self.points[index]
        return Point2D(float(x), float(y))

    def __eq__(self, other):
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def region(self, name: str) -> np.ndarray:
        return self.points[REGIONS[name].start : REGIONS[name].stop]

    @property
    def jaw(self) -> np.ndarray:
        return self.region("jaw")

    @property
    def right_brow(self) -> np.ndarray:
        return self.region("right_brow")

    @property
    def left_brow(self) -> np.ndarray:
        return self.region("left_brow")

    @property
    def nose(self) -> np.ndarray:
        return self.region("nose")

    @property
    def right_eye(self) -> np.ndarray:
        return self.region("right_eye")

    @property
    def left_eye(self) -> np.ndarray:
        return self.region("left_eye")

    @property
    def mouth(self) -> np.ndarray:
        return self.region("mouth")

    @property
    def lips(self) -> np.ndarray:
        return self.region("lips")


class LandmarkProvider(Protocol):
    """Common contract for landmark sources.

    ``image_path`` lets file-backed providers locate their annotations; the
    predictor ignores it.
    """

    source: str

    def detect_faces(
        self, image: np.ndarray, image_path: str | Path | None = None
    ) -> list[FaceBox]: ...

    def detect_landmarks(
        self, image: np.ndarray, box: FaceBox, image_path: str | Path | None = None
    ) -> LandmarkSet: ...


# --------------------------------------------------------------------------
# sidecar provider


def sidecar_path(image_path: str | Path) -> Path:
    image_path = Path(image_path)
    return image_path.with_name(image_path.stem + SIDECAR_SUFFIX)


def _fmt(value: float) -> str:
    # repr round-trips float64 exactly
    return repr(float(value))


def format_sidecar(faces: Sequence[tuple[FaceBox, LandmarkSet | np.ndarray]]) -> str:
    lines = []
    for box, landmarks in faces:
        pts = landmarks.points if isinstance(landmarks, LandmarkSet) else np.asarray(landmarks)
        lines.append(
            "facebox " + " ".join(_fmt(v) for v in (box.left, box.top, box.right, box.bottom))
        )
        for i, (x, y) in enumerate(pts):
            lines.append(f"{i} {_fmt(x)} {_fmt(y)}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_sidecar(
    image_path: str | Path, faces: Sequence[tuple[FaceBox, LandmarkSet | np.ndarray]]
) -> Path:
    path = sidecar_path(image_path)
    path.write_text(format_sidecar(faces))
    return path


def parse_sidecar(text: str, origin: str = "<sidecar>") -> list[tuple[FaceBox, LandmarkSet]]:
    faces: list[tuple[FaceBox, LandmarkSet]] = []
    box: FaceBox | None = None
    rows: list[tuple[float, float]] = []

    def flush():
        if box is None:
            return
        if len(rows) != NUM_LANDMARKS:
            raise AnnotationFormatError(
                f"{origin}: face block has {len(rows)} points, expected {NUM_LANDMARKS}"
            )
        faces.append((box, LandmarkSet(np.array(rows), source="sidecar")))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "facebox":
                if len(parts) != 5:
                    raise ValueError("facebox needs four coordinates")
                flush()
                box = FaceBox(*(float(p) for p in parts[1:]))
                rows = []
                continue
            if box is None:
                raise ValueError("point line before any facebox header")
            if len(parts) != 3:
                raise ValueError("point line must be 'index x y'")
            index, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise AnnotationFormatError(f"{origin}:{lineno}: {exc}") from None
        if index != len(rows):
            raise AnnotationFormatError(
                f"{origin}:{lineno}: expected point index {len(rows)}, got {index}"
            )
        if not (math.isfinite(x) and math.isfinite(y)):
            raise AnnotationFormatError(f"{origin}:{lineno}: non-finite coordinate")
        rows.append((x, y))
    flush()
    return faces


class SidecarProvider:
    """Reads landmarks from ``<image-stem>.landmarks.txt`` files.

    A missing sidecar means "no face"; a malformed one raises.
    """

    source = "sidecar"

    def _faces(self, image_path) -> list[tuple[FaceBox, LandmarkSet]]:
        if image_path is None:
            return []
        path = sidecar_path(image_path)
        if not path.exists():
            return []
        return parse_sidecar(path.read_text(), origin=str(path))

    def detect_faces(self, image, image_path=None) -> list[FaceBox]:
        check_rgb(image)
        return [box for box, _ in self._faces(image_path)]

    def detect_landmarks(self, image, box, image_path=None) -> LandmarkSet:
        for candidate, landmarks in self._faces(image_path):
            if candidate == box:
                return landmarks
        raise AnnotationFormatError(f"no sidecar entry for {box} ({image_path})")


# --------------------------------------------------------------------------
# predictor provider


def resolve_predictor_path(configured: str | Path | None = None) -> Path | None:
    value = configured or os.environ.get(PREDICTOR_ENV)
    return Path(value) if value else None


class PredictorProvider:
    """dlib frontal face detector plus a 68-point shape predictor model file."""

    source = "predictor"

    def __init__(self, predictor_path: str | Path | None = None, upsample: int = 1):
        try:
            import dlib
        except ImportError as exc:
            raise ProviderInitError(
                "the predictor provider needs dlib (pip install 'artifact[predictor]')"
            ) from exc
        path = resolve_predictor_path(predictor_path)
        if path is None:
            raise ProviderInitError(
                f"no predictor model configured (landmarks.predictor_path or ${PREDICTOR_ENV})"
            )
        if not path.is_file():
            raise ProviderInitError(f"predictor model not found: {path}")
        try:
            self._predictor = dlib.shape_predictor(str(path))
        except RuntimeError as exc:
            raise ProviderInitError(f"cannot load predictor model {path}: {exc}") from exc
        self._detector = dlib.get_frontal_face_detector()
        self._dlib = dlib
        self.upsample = upsample

    def detect_faces(self, image, image_path=None) -> list[FaceBox]:
        image = np.ascontiguousarray(check_rgb(image), dtype=np.uint8)
        boxes = [
            FaceBox(r.left(), r.top(), r.right(), r.bottom())
            for r in self._detector(image, self.upsample)
            if r.right() > r.left() and r.bottom() > r.top()
        ]
        return sorted(boxes, key=lambda b: (b.top, b.left, b.bottom, b.right))

    def detect_landmarks(self, image, box, image_path=None) -> LandmarkSet:
        image = np.ascontiguousarray(check_rgb(image), dtype=np.uint8)
        rect = self._dlib.rectangle(
            int(round(box.left)), int(round(box.top)), int(round(box.right)), int(round(box.bottom))
        )
        shape = self._predictor(image, rect)
        if shape.num_parts != NUM_LANDMARKS:
            raise AnnotationFormatError(
                f"predictor returned {shape.num_parts} points, expected {NUM_LANDMARKS}"
            )
        pts = np.array([[p.x, p.y] for p in shape.parts()], dtype=np.float64)
        return LandmarkSet(pts, source="predictor")


def make_provider(kind: str, predictor_path: str | Path | None = None) -> LandmarkProvider:
    if kind == "sidecar":
        return SidecarProvider()
    if kind == "predictor":
        return PredictorProvider(predictor_path)
    raise ValueError(f"unknown landmark provider {kind!r}")
