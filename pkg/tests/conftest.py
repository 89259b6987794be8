import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maskcut.landmarks import FaceBox, LandmarkSet  # noqa: E402
from maskcut.synthetic import face_box, random_face_landmarks  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def face_landmarks(rng) -> LandmarkSet:
    return random_face_landmarks(rng, 64, 64)


@pytest.fixture
def face(face_landmarks) -> tuple[FaceBox, LandmarkSet]:
    return face_box(face_landmarks), face_landmarks


@pytest.fixture(scope="session")
def small_split(tmp_path_factory):
    """80-image synthetic dataset, face-cut and split 60/20/20."""
    from maskcut import dataset, synthetic
    from maskcut.landmarks import SidecarProvider

    root = tmp_path_factory.mktemp("small")
    synthetic.write_dataset(root / "src", 80, seed=11)
    manifest = dataset.scan_dataset(root / "src")
    derived = dataset.preprocess_dataset(manifest, root / "cut", SidecarProvider())
    return dataset.split_dataset(derived, seed=0)


@pytest.fixture(scope="session")
def trained_toy(small_split):
    from maskcut.classifier import ClassifierConfig, build_model, train

    config = ClassifierConfig(backbone="toy", epochs=10, learning_rate=1e-3, seed=0, batch_size=16)
    return train(build_model(config), small_split, config)
