"""Backbone + global-average-pool + dense head classifier and its training loop.

``large_pretrained`` is ResNet-50 with its pooling and fully connected layers
removed; ``toy`` is a three-stage conv net that trains in seconds on a CPU.
Both end in the same head, and both expose the last feature maps and the
pre-softmax logits through :meth:`MaskClassifier.forward_with_taps`.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import cv2
import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .dataset import CLASS_NAMES, DatasetManifest, SampleRecord
from .errors import (
    ConfigError,
    DataError,
    LabelError,
    ParseError,
    TrainingDivergedError,
    WeightLoadError,
)
from .images import load_image

log = logging.getLogger(__name__)

BACKBONES = ("toy", "large_pretrained")
LOSSES = ("cross_entropy", "kl_divergence")
DEFAULT_IMAGE_SIZE = {"toy": (64, 64), "large_pretrained": (224, 224)}
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)
HISTORY_HEADER = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


@dataclass
class ClassifierConfig:
    backbone: str = "toy"
    num_classes: int = 2
    epochs: int = 10
    loss: str = "cross_entropy"
    batch_size: int = 32
    image_size: tuple[int, int] | None = None
    learning_rate: float = 1e-4
    seed: int = 0
    pad_value: tuple[int, int, int] = (0, 0, 0)
    pretrained: bool = True
    weights_path: str | None = None
    freeze_backbone: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ConfigError(f"backbone must be one of {BACKBONES}, got {self.backbone!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be at least 2")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.image_size is None:
            self.image_size = DEFAULT_IMAGE_SIZE[self.backbone]
        self.image_size = tuple(int(v) for v in self.image_size)
        if len(self.image_size) != 2 or min(self.image_size) <= 0:
            raise ConfigError(f"image_size must be two positive ints, got {self.image_size}")
        self.pad_value = tuple(int(v) for v in self.pad_value)

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown classifier keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


# --------------------------------------------------------------------------
# model


class MaskClassifier(nn.Module):
    def __init__(self, features: nn.Module, channels: int, num_classes: int):
        super().__init__()
        self.features = features
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(channels, num_classes)

    def logits_from_features(self, features: torch.Tensor) -> torch.Tensor:
        return self.head(self.pool(features).flatten(1))

    def forward_with_taps(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        features = self.features(x)
        return {"features": features, "logits": self.logits_from_features(features)}

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward_with_taps(x)["logits"]


def toy_backbone(widths: Sequence[int] = (16, 32, 64)) -> tuple[nn.Module, int]:
    layers: list[nn.Module] = []
    channels = 3
    for width in widths:
        layers += [nn.Conv2d(channels, width, 3, padding=1), nn.ReLU(inplace=True), nn.MaxPool2d(2)]
        channels = width
    return nn.Sequential(*layers), channels


def _resnet50_backbone(config: ClassifierConfig) -> tuple[nn.Module, int]:
    from torchvision.models import ResNet50_Weights, resnet50

    net = resnet50(weights=None)
    if config.pretrained:
        try:
            if config.weights_path:
                state = torch.load(config.weights_path, map_location="cpu", weights_only=True)
            else:
                state = ResNet50_Weights.IMAGENET1K_V2.get_state_dict(progress=False)
            net.load_state_dict(state)
        except Exception as exc:  # download, file and key-mismatch failures alike
            raise WeightLoadError(f"cannot load ResNet-50 ImageNet weights: {exc}") from exc
    # drop avgpool and fc; our own pool + head replace them
    return nn.Sequential(*list(net.children())[:-2]), net.fc.in_features


def build_model(config: ClassifierConfig) -> MaskClassifier:
    torch.manual_seed(config.seed)
    if config.backbone == "toy":
        features, channels = toy_backbone()
    else:
        features, channels = _resnet50_backbone(config)
    model = MaskClassifier(features, channels, config.num_classes)
    if config.freeze_backbone:
        for p in model.features.parameters():
            p.requires_grad_(False)
    return model


# --------------------------------------------------------------------------
# input preparation


def letterbox(image: np.ndarray, size: tuple[int, int], pad_value=(0, 0, 0), interpolation=None) -> np.ndarray:
    """Pad to a centred square with ``pad_value``, then resize to ``size`` (H, W)."""
    h, w = image.shape[:2]
    side = max(h, w)
    top, left = (side - h) // 2, (side - w) // 2
    value = pad_value if image.ndim == 3 else pad_value[0]
    square = cv2.copyMakeBorder(
        image, top, side - h - top, left, side - w - left, cv2.BORDER_CONSTANT, value=value
    )
    if interpolation is None:
        interpolation = cv2.INTER_AREA if side > max(size) else cv2.INTER_LINEAR
    return cv2.resize(square, (size[1], size[0]), interpolation=interpolation)


def to_tensor(images: Sequence[np.ndarray]) -> torch.Tensor:
    batch = np.stack(images).astype(np.float32) / 255.0
    batch = (batch - IMAGENET_MEAN) / IMAGENET_STD
    return torch.from_numpy(batch).permute(0, 3, 1, 2).contiguous()


def prepare(image: np.ndarray, config: ClassifierConfig) -> np.ndarray:
    return letterbox(image, config.image_size, config.pad_value)


# --------------------------------------------------------------------------
# training


def loss_value(logits: torch.Tensor, targets: torch.Tensor, kind: str) -> torch.Tensor:
    if kind == "cross_entropy":
        return F.cross_entropy(logits, targets)
    if kind == "kl_divergence":
        onehot = F.one_hot(targets, logits.shape[1]).to(logits.dtype)
        return F.kl_div(F.log_softmax(logits, dim=1), onehot, reduction="batchmean")
    raise ConfigError(f"unknown loss {kind!r}")


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    order = np.random.default_rng([seed, epoch]).permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


@dataclass
class TrainedModel:
    network: MaskClassifier
    config: ClassifierConfig
    class_names: tuple[str, ...] = CLASS_NAMES
    history: list[EpochStats] = field(default_factory=list)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {"classifier": asdict(self.config), "class_names": list(self.class_names)}
        (directory / "config.json").write_text(json.dumps(meta, indent=2) + "\n")
        write_history(self.history, directory / "history.csv")
        torch.save(self.network.state_dict(), directory / "weights.pt")

    @classmethod
    def load(cls, directory: str | Path) -> "TrainedModel":
        directory = Path(directory)
        meta = json.loads((directory / "config.json").read_text())
        config = ClassifierConfig.from_dict({**meta["classifier"], "pretrained": False})
        network = build_model(config)
        state = torch.load(directory / "weights.pt", map_location="cpu", weights_only=True)
        network.load_state_dict(state)
        network.eval()
        history_path = directory / "history.csv"
        history = read_history(history_path) if history_path.exists() else []
        return cls(network, config, tuple(meta["class_names"]), history)


def write_history(history: Sequence[EpochStats], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HISTORY_HEADER)
        for h in history:
            writer.writerow([h.epoch, repr(h.train_loss), repr(h.train_acc), repr(h.val_loss), repr(h.val_acc)])


def read_history(path: str | Path) -> list[EpochStats]:
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ParseError(f"cannot read history {path}: {exc}") from None
    if not rows or tuple(rows[0]) != HISTORY_HEADER:
        raise ParseError(f"{path}: history header must be {','.join(HISTORY_HEADER)}")
    if len(rows) == 1:
        raise ParseError(f"{path}: history has no epochs")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        try:
            epoch, *values = row
            stats = EpochStats(int(epoch), *(float(v) for v in values))
        except (TypeError, ValueError):
            raise ParseError(f"{path}:{lineno}: malformed history row {row}") from None
        out.append(stats)
    return out


def _load_images(records: Sequence[SampleRecord], config: ClassifierConfig) -> list[np.ndarray]:
    def one(record):
        return prepare(load_image(record.path), config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(one, records))
    return [one(r) for r in records]


def _targets(records: Sequence[SampleRecord], class_names: Sequence[str]) -> torch.Tensor:
    index = {name: i for i, name in enumerate(class_names)}
    try:
        return torch.tensor([index[r.label] for r in records], dtype=torch.long)
    except KeyError as exc:
        raise LabelError(f"label {exc.args[0]!r} not in {list(class_names)}") from None


@torch.no_grad()
def _score(model: nn.Module, records, class_names, config) -> tuple[float, float]:
    model.eval()
    total_loss, correct = 0.0, 0
    for start in range(0, len(records), config.batch_size):
        chunk = records[start : start + config.batch_size]
        x = to_tensor(_load_images(chunk, config))
        y = _targets(chunk, class_names)
        logits = model(x)
        total_loss += float(loss_value(logits, y, config.loss)) * len(chunk)
        correct += int((logits.argmax(1) == y).sum())
    return total_loss / len(records), correct / len(records)


def train(
    model: MaskClassifier,
    manifest: DatasetManifest,
    config: ClassifierConfig,
    class_names: Sequence[str] = CLASS_NAMES,
) -> TrainedModel:
    """Fit ``model`` on the manifest's train split, validating every epoch.

    Batch order is a pure function of ``(config.seed, epoch)``; kernel-level
    nondeterminism in the backend is not controlled.
    """
    class_names = tuple(class_names)
    if len(class_names) != config.num_classes:
        raise ConfigError(f"{config.num_classes} classes configured, {len(class_names)} names given")
    train_records = manifest.subset("train")
    val_records = manifest.subset("val")
    if not train_records or not val_records:
        raise DataError("train and val splits must both be non-empty")
    train_targets = _targets(train_records, class_names)
    _targets(val_records, class_names)

    torch.manual_seed(config.seed)
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=config.learning_rate)
    history = []
    for epoch in range(config.epochs):
        model.train()
        seen, loss_sum, correct = 0, 0.0, 0
        for batch in epoch_batches(len(train_records), config.batch_size, config.seed, epoch):
            x = to_tensor(_load_images([train_records[i] for i in batch], config))
            y = train_targets[torch.from_numpy(batch)]
            optimizer.zero_grad()
            logits = model(x)
            loss = loss_value(logits, y, config.loss)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch + 1}")
            loss.backward()
            optimizer.step()
            seen += len(batch)
            loss_sum += loss.item() * len(batch)
            correct += int((logits.argmax(1) == y).sum())
        val_loss, val_acc = _score(model, val_records, class_names, config)
        stats = EpochStats(epoch + 1, loss_sum / seen, correct / seen, val_loss, val_acc)
        if not all(math.isfinite(v) for v in (stats.train_loss, stats.val_loss)):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch + 1}")
        history.append(stats)
        log.info(
            "epoch %d/%d train_loss %.4f train_acc %.4f val_loss %.4f val_acc %.4f",
            stats.epoch, config.epochs, stats.train_loss, stats.train_acc, stats.val_loss, stats.val_acc,
        )
    model.eval()
    return TrainedModel(model, config, class_names, history)


# --------------------------------------------------------------------------
# inference


@torch.no_grad()
def predict_batch(model: TrainedModel, images: Sequence[np.ndarray]) -> np.ndarray:
    """Class probabilities, one row per image, in input order."""
    if len(images) == 0:
        return np.zeros((0, model.config.num_classes))
    net = model.network.eval()
    out = []
    for start in range(0, len(images), model.config.batch_size):
        chunk = [prepare(img, model.config) for img in images[start : start + model.config.batch_size]]
        out.append(F.softmax(net(to_tensor(chunk)).double(), dim=1).numpy())
    return np.concatenate(out)


def predict(model: TrainedModel, image: np.ndarray) -> np.ndarray:
    return predict_batch(model, [image])[0]


def predict_paths(model: TrainedModel, paths: Sequence[str | Path]) -> np.ndarray:
    probs = []
    size = model.config.batch_size
    for start in range(0, len(paths), size):
        probs.append(predict_batch(model, [load_image(p) for p in paths[start : start + size]]))
    return np.concatenate(probs) if probs else np.zeros((0, model.config.num_classes))
