import numpy as np
import pytest

from robust3dcil.cloud import PointCloud
from robust3dcil.features import GeometricFeatureExtractor
from robust3dcil.synthetic import gen_synthetic_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_cloud(rng):
    return PointCloud(rng.normal(size=(1024, 3)))


@pytest.fixture(scope="session")
def extractor():
    return GeometricFeatureExtractor()


@pytest.fixture(scope="session")
def synthetic_8x40():
    """Shared full-size dataset; generation is pure so reuse is safe."""
    manifest, samples = gen_synthetic_dataset(8, 40, seed=1)
    return manifest, samples


@pytest.fixture(scope="session")
def tiny_dataset():
    """4 classes x 10 samples at the canonical 1024 points."""
    manifest, samples = gen_synthetic_dataset(4, 10, seed=5)
    return manifest, samples
