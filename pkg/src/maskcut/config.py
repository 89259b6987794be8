"""Pipeline configuration file (YAML).

Precedence, lowest to highest: built-in defaults, the ``--config`` file,
command-line flags. Unknown sections or keys are rejected.

Example::

    landmarks:
      provider: predictor
      predictor_path: models/shape_predictor_68_face_landmarks.dat
    facecut:
      include_point_zero: false
      faces: largest
      no_face: skip
      fill: [0, 0, 0]
    dataset:
      seed: 0
      ratios: [0.6, 0.2, 0.2]
    classifier:
      backbone: toy
      epochs: 10
    report:
      alpha: 0.4
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .classifier import ClassifierConfig
from .dataset import DEFAULT_RATIOS, validate_ratios
from .errors import ConfigError, RatioError
from .explain import DEFAULT_ALPHA
from .facecut import CutOptions


@dataclass
class LandmarksConfig:
    provider: str = "predictor"
    predictor_path: str | None = None

    def __post_init__(self):
        if self.provider not in ("predictor", "sidecar"):
            raise ConfigError(f"landmarks.provider must be predictor or sidecar, got {self.provider!r}")


@dataclass
class DatasetConfig:
    seed: int = 0
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    workers: int = 1
    include_no_face: bool = False

    def __post_init__(self):
        try:
            self.ratios = validate_ratios(self.ratios)
        except RatioError as exc:
            raise ConfigError(f"dataset.ratios: {exc}") from None


@dataclass
class ReportConfig:
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise ConfigError("report.alpha must be in [0, 1]")


@dataclass
class PipelineConfig:
    landmarks: LandmarksConfig = field(default_factory=LandmarksConfig)
    facecut: CutOptions = field(default_factory=CutOptions)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    report: ReportConfig = field(default_factory=ReportConfig)


SECTIONS = {f.name: f.default_factory for f in fields(PipelineConfig)}


def _section(name: str, cls, values) -> object:
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {unknown}")
    try:
        return cls(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from None


def config_from_dict(data: dict | None) -> PipelineConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown configuration sections: {unknown}")
    return PipelineConfig(**{name: _section(name, cls, data.get(name)) for name, cls in SECTIONS.items()})


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    return config_from_dict(data)
