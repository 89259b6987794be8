"""Synthetic faces for tests, benchmarks and demos.

Landmarks follow the usual 68-point layout: the jaw runs along a convex lower
arc from image-left to image-right, the brows sit above it, and the inner
features fall inside. The benchmark dataset paints a coloured square inside
each face over a noise background; the square colour is the class.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .images import save_image
from .landmarks import FaceBox, LandmarkSet, write_sidecar

CLASS_COLORS = {
    "with_mask": (40, 90, 220),
    "without_mask": (225, 170, 60),
}


def _arc(cx, cy, a, b, start, stop, n):
    t = np.linspace(start, stop, n)
    return np.stack([cx + a * np.cos(t), cy + b * np.sin(t)], axis=1)


def make_landmarks(
    rng: np.random.Generator, center: tuple[float, float], half_width: float, half_height: float
) -> LandmarkSet:
    cx, cy = center
    a, b = half_width, half_height
    pts = np.zeros((68, 2))

    # jaw 0..16: lower half of an ellipse, image-left to image-right, strictly convex
    steps = rng.uniform(0.7, 1.3, 16)
    theta = np.pi - np.concatenate([[0.0], np.cumsum(steps)]) * np.pi / steps.sum()
    pts[0:17] = np.stack([cx + a * np.cos(theta), cy + b * np.sin(theta)], axis=1)

    brow_y = cy - b * rng.uniform(0.35, 0.55)
    arch = b * rng.uniform(0.05, 0.15)
    # right brow 17..21 (image left, outer to inner), left brow 22..26 (inner to outer)
    xs_r = np.linspace(cx - a * rng.uniform(0.75, 0.9), cx - a * rng.uniform(0.08, 0.15), 5)
    xs_l = np.linspace(cx + a * rng.uniform(0.08, 0.15), cx + a * rng.uniform(0.75, 0.9), 5)
    bump = np.sin(np.linspace(0.2, np.pi - 0.2, 5))
    pts[17:22] = np.stack([xs_r, brow_y - arch * bump], axis=1)
    pts[22:27] = np.stack([xs_l, brow_y - arch * bump], axis=1)

    nose_top = brow_y + b * rng.uniform(0.05, 0.15)
    pts[27] = (cx, nose_top)
    pts[28:31] = np.stack([np.full(3, cx), np.linspace(nose_top, cy + 0.15 * b, 5)[1:4]], axis=1)
    pts[31:36] = np.stack([np.linspace(cx - 0.2 * a, cx + 0.2 * a, 5), np.full(5, cy + 0.2 * b)], axis=1)

    eye_y = brow_y + b * 0.2
    pts[36:42] = _arc(cx - 0.45 * a, eye_y, 0.18 * a, 0.06 * b, np.pi, -np.pi, 7)[:6]
    pts[42:48] = _arc(cx + 0.45 * a, eye_y, 0.18 * a, 0.06 * b, np.pi, -np.pi, 7)[:6]

    mouth_y = cy + 0.5 * b
    pts[48:61] = _arc(cx, mouth_y, 0.35 * a, 0.12 * b, np.pi, -np.pi, 14)[:13]
    pts[61:68] = _arc(cx, mouth_y, 0.22 * a, 0.05 * b, np.pi, 0, 7)
    return LandmarkSet(pts, source="sidecar")


def random_face_landmarks(rng: np.random.Generator, height: int = 64, width: int = 64) -> LandmarkSet:
    a = width * rng.uniform(0.32, 0.42)
    b = height * rng.uniform(0.28, 0.36)
    cx = width / 2 + rng.uniform(-0.05, 0.05) * width
    cy = height * 0.45 + rng.uniform(-0.04, 0.04) * height
    return make_landmarks(rng, (cx, cy), a, b)


def face_box(landmarks: LandmarkSet) -> FaceBox:
    pts = landmarks.points
    return FaceBox(
        float(np.floor(pts[:, 0].min())),
        float(np.floor(pts[:, 1].min())),
        float(np.ceil(pts[:, 0].max())),
        float(np.ceil(pts[:, 1].max())),
    )


@dataclass
class SyntheticSample:
    image: np.ndarray
    label: str
    landmarks: LandmarkSet
    square: tuple[int, int, int, int]  # top, left, bottom, right (exclusive)


def make_sample(rng: np.random.Generator, label: str, height: int = 64, width: int = 64) -> SyntheticSample:
    image = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    landmarks = random_face_landmarks(rng, height, width)
    jaw = landmarks.jaw
    cx = float(landmarks.points[27, 0])
    cy = float(jaw[0, 1])
    half_w = float(jaw[16, 0] - jaw[0, 0]) / 2
    half_h = float(jaw[8, 1] - cy)
    side = int(rng.integers(12, 17))
    # keep the square well inside the lower face
    top = int(round(cy + rng.uniform(0.0, 0.45) * half_h - side / 2))
    left = int(round(cx + rng.uniform(-0.35, 0.35) * half_w - side / 2))
    color = np.array(CLASS_COLORS[label]) + rng.integers(-20, 21, size=3)
    image[top : top + side, left : left + side] = np.clip(color, 0, 255).astype(np.uint8)
    return SyntheticSample(image, label, landmarks, (top, left, top + side, left + side))


def write_dataset(
    root: str | Path, n_images: int = 400, seed: int = 0, size: int = 64
) -> list[SyntheticSample]:
    """Write a balanced class-per-directory dataset with sidecar landmarks."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    samples = []
    labels = sorted(CLASS_COLORS)
    for i in range(n_images):
        label = labels[i % len(labels)]
        sample = make_sample(rng, label, size, size)
        path = root / label / f"img_{i:05d}.png"
        save_image(path, sample.image)
        write_sidecar(path, [(face_box(sample.landmarks), sample.landmarks)])
        samples.append(sample)
    return samples
