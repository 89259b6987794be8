from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .errors import DecodeError

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".webp")


def load_image(path: str | Path) -> np.ndarray:
    """Read an image file as an HxWx3 uint8 RGB array."""
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None or bgr.size == 0:
        raise DecodeError(f"cannot decode image: {path}")
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)


def save_image(path: str | Path, rgb: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if rgb.ndim == 2:
        ok = cv2.imwrite(str(path), rgb)
    else:
        ok = cv2.imwrite(str(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
    if not ok:
        raise OSError(f"cannot write image: {path}")


def check_rgb(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.size == 0 or image.ndim != 3 or image.shape[2] != 3:
        raise DecodeError(f"expected a non-empty HxWx3 image, got shape {image.shape}")
    return image


def is_image_file(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
