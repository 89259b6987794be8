"""Grad-CAM heatmaps and colour overlays."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
import torch
import torch.nn.functional as F

from .classifier import TrainedModel, letterbox, to_tensor
from .errors import CapabilityError, InputError, ShapeError
from .images import check_rgb

DEFAULT_ALPHA = 0.4


@dataclass(frozen=True, eq=False)
class Heatmap:
    values: np.ndarray  # feature-map resolution, in [0, 1]
    upsampled: np.ndarray  # input-image resolution


@lru_cache(maxsize=1)
def colormap() -> np.ndarray:
    """The shipped 256x3 uint8 blue-to-red lookup table."""
    text = resources.files("maskcut").joinpath("data/blue_red_lut.txt").read_text()
    rows = [line.split() for line in text.splitlines() if line and not line.startswith("#")]
    lut = np.array(rows, dtype=np.uint8)
    assert lut.shape == (256, 3)
    lut.setflags(write=False)
    return lut


def cam_from_features(features: torch.Tensor, gradients: torch.Tensor) -> np.ndarray:
    """Grad-CAM on one ``(C, h, w)`` feature stack and its logit gradients."""
    weights = gradients.mean(dim=(1, 2))
    cam = F.relu((weights[:, None, None] * features).sum(dim=0))
    peak = cam.max()
    if peak > 0:
        cam = cam / peak
    return cam.detach().double().numpy()


def upsample(cam: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize, half-pixel centres (align_corners=False)."""
    t = torch.from_numpy(np.ascontiguousarray(cam, dtype=np.float64))[None, None]
    return F.interpolate(t, size=size, mode="bilinear", align_corners=False)[0, 0].numpy()


def _class_index(model: TrainedModel, target_class) -> int:
    names = list(model.class_names)
    if isinstance(target_class, str):
        if target_class not in names:
            raise InputError(f"unknown class {target_class!r}; expected one of {names}")
        return names.index(target_class)
    index = int(target_class)
    if not 0 <= index < len(names):
        raise InputError(f"class index {index} out of range")
    return index


def feature_gradients(model: TrainedModel, x: torch.Tensor, target: int):
    """Last feature maps and d(target logit)/d(feature maps) for a batch of one.

    Uses ``torch.autograd.grad`` so no ``.grad`` buffer on the model is
    touched; concurrent calls do not interfere.
    """
    net = model.network
    if not (hasattr(net, "features") and hasattr(net, "logits_from_features")):
        raise CapabilityError("model does not expose feature-map and logit taps")
    net.eval()
    with torch.no_grad():
        features = net.features(x)
    features = features.detach().requires_grad_(True)
    logits = net.logits_from_features(features)
    (grads,) = torch.autograd.grad(logits[0, target], features)
    return features[0].detach(), grads[0]


def compute_cam(model: TrainedModel, image: np.ndarray, target_class) -> Heatmap:
    """Grad-CAM for ``target_class`` on ``image``.

    The image is letterboxed exactly as for prediction; the heatmap is
    upsampled to the letterboxed square and the padding cropped away, so
    ``upsampled`` lines up with ``image`` pixel for pixel.
    """
    image = check_rgb(image)
    target = _class_index(model, target_class)
    config = model.config
    x = to_tensor([letterbox(image, config.image_size, config.pad_value)])
    features, grads = feature_gradients(model, x, target)
    values = cam_from_features(features, grads)
    h, w = image.shape[:2]
    side = max(h, w)
    top, left = (side - h) // 2, (side - w) // 2
    full = upsample(values, (side, side))[top : top + h, left : left + w]
    return Heatmap(values, np.clip(full, 0.0, 1.0))


def overlay(heatmap: Heatmap | np.ndarray, image: np.ndarray, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    heat = heatmap.upsampled if isinstance(heatmap, Heatmap) else np.asarray(heatmap)
    image = check_rgb(image)
    if heat.shape != image.shape[:2]:
        raise ShapeError(f"heatmap {heat.shape} does not match image {image.shape[:2]}")
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must be in [0, 1], got {alpha}")
    colors = colormap()[np.clip(np.rint(heat * 255), 0, 255).astype(np.intp)]
    blend = (1.0 - alpha) * image.astype(np.float64) + alpha * colors.astype(np.float64)
    return np.clip(np.rint(blend), 0, 255).astype(np.uint8)


def heatmap_to_gray(heatmap: Heatmap) -> np.ndarray:
    return np.clip(np.rint(heatmap.upsampled * 255), 0, 255).astype(np.uint8)
