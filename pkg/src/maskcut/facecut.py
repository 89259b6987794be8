"""Boundary-polygon face cut.

The face outline is traced through the jaw (1..16, or 0..16), back along the
left brow (26..22), over the nasion (27) and out along the right brow
(21..17), closing on the first jaw point. Everything outside that polygon is
replaced by a fill colour and the result is cropped to the polygon.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import cv2
import numpy as np

from .errors import EmptyMaskError, NoFaceError, ShapeError
from .images import check_rgb
from .landmarks import FaceBox, LandmarkProvider, LandmarkSet
from .raster import is_simple_polygon, scanline_fill

log = logging.getLogger(__name__)

NASION = 27
FACES_POLICIES = ("largest", "all")
NO_FACE_POLICIES = ("skip", "passthrough", "error")


def boundary_indices(include_point_zero: bool = False) -> tuple[int, ...]:
    jaw = range(0 if include_point_zero else 1, 17)
    return (*jaw, *range(26, 21, -1), NASION, *range(21, 16, -1))


@dataclass(frozen=True, eq=False)
class BoundaryPath:
    indices: tuple[int, ...]
    points: np.ndarray  # (n, 2) x, y

    def __len__(self):
        return len(self.indices)

    def is_simple(self) -> bool:
        return is_simple_polygon(self.points)


@dataclass(frozen=True, eq=False)
class CutImage:
    pixels: np.ndarray  # cropped RGB
    fill: tuple[int, int, int]
    origin: tuple[int, int]  # (top, left) in the source image
    mask: np.ndarray | None = None  # cropped mask, same height/width as pixels
    boundary: BoundaryPath | None = None
    box: FaceBox | None = None


@dataclass
class CutOptions:
    include_point_zero: bool = False
    faces: str = "largest"
    no_face: str = "skip"
    fill: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.faces not in FACES_POLICIES:
            raise ValueError(f"faces must be one of {FACES_POLICIES}, got {self.faces!r}")
        if self.no_face not in NO_FACE_POLICIES:
            raise ValueError(f"no_face must be one of {NO_FACE_POLICIES}, got {self.no_face!r}")
        self.fill = parse_fill(self.fill)


def parse_fill(value) -> tuple[int, int, int]:
    if isinstance(value, str):
        value = value.split(",")
    fill = tuple(int(v) for v in value)
    if len(fill) != 3 or not all(0 <= v <= 255 for v in fill):
        raise ValueError(f"fill must be three values in 0..255, got {value!r}")
    return fill


def clamp_points(points: np.ndarray, height: int, width: int) -> np.ndarray:
    pts = np.array(points, dtype=np.float64)
    pts[:, 0] = np.clip(pts[:, 0], 0, width - 1)
    pts[:, 1] = np.clip(pts[:, 1], 0, height - 1)
    return pts


def select_boundary_points(
    landmarks: LandmarkSet,
    include_point_zero: bool = False,
    image_shape: Sequence[int] | None = None,
) -> BoundaryPath:
    """Pick the face outline out of a landmark set.

    With ``image_shape`` the vertices are clamped into the image.
    """
    indices = boundary_indices(include_point_zero)
    points = landmarks.points[list(indices)]
    if image_shape is not None:
        points = clamp_points(points, image_shape[0], image_shape[1])
    else:
        points = points.copy()
    return BoundaryPath(indices, points)


def build_face_mask(path: BoundaryPath | np.ndarray, height: int, width: int) -> np.ndarray:
    points = path.points if isinstance(path, BoundaryPath) else np.asarray(path, dtype=np.float64)
    return scanline_fill(clamp_points(points, height, width), height, width)


def apply_cut(image: np.ndarray, mask: np.ndarray, fill=(0, 0, 0)) -> CutImage:
    image = np.asarray(image)
    mask = np.asarray(mask)
    if mask.shape != image.shape[:2]:
        raise ShapeError(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        raise EmptyMaskError("mask has no set cells")
    cols = np.flatnonzero(mask.any(axis=0))
    top, bottom, left, right = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
    fill = parse_fill(fill)
    crop_mask = mask[top:bottom, left:right].astype(bool)
    pixels = image[top:bottom, left:right].copy()
    pixels[~crop_mask] = np.asarray(fill, dtype=image.dtype)
    return CutImage(pixels, fill, (int(top), int(left)), crop_mask)


def cut_face(
    image: np.ndarray,
    provider: LandmarkProvider,
    options: CutOptions | None = None,
    image_path: str | Path | None = None,
) -> list[CutImage]:
    """Detect, outline and cut the face(s) in one image.

    Returns an empty list when nothing is found under the ``skip`` and
    ``passthrough`` policies; copying the original through is the caller's
    job. ``error`` raises :class:`NoFaceError`.
    """
    options = options or CutOptions()
    image = check_rgb(image)
    height, width = image.shape[:2]
    boxes = provider.detect_faces(image, image_path=image_path)
    if not boxes:
        if options.no_face == "error":
            raise NoFaceError(f"no face found in {image_path or 'image'}")
        return []
    if options.faces == "largest":
        # ties keep the provider's order
        boxes = [max(boxes, key=lambda b: b.area)]
    cuts = []
    for box in boxes:
        landmarks = provider.detect_landmarks(image, box, image_path=image_path)
        path = select_boundary_points(landmarks, options.include_point_zero, (height, width))
        mask = build_face_mask(path, height, width)
        cut = apply_cut(image, mask, options.fill)
        cuts.append(replace(cut, boundary=path, box=box))
    return cuts


def draw_overlay(
    image: np.ndarray, path: BoundaryPath, box: FaceBox | None = None, radius: int = 2
) -> np.ndarray:
    """Debug rendering: boundary markers and outline over the source image."""
    out = np.ascontiguousarray(image.copy())
    pts = np.rint(path.points).astype(np.int32)
    cv2.polylines(out, [pts.reshape(-1, 1, 2)], True, (0, 255, 0), 1)
    for x, y in pts:
        cv2.circle(out, (int(x), int(y)), radius, (255, 0, 0), -1)
    if box is not None:
        cv2.rectangle(
            out,
            (int(box.left), int(box.top)),
            (int(box.right), int(box.bottom)),
            (0, 0, 255),
            1,
        )
    return out
