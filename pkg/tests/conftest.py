import numpy as np
import pytest

from handeyecov import profiles
from handeyecov.datagen import SyntheticConfig, generate_dataset, random_pose
from handeyecov.liegroup import exp_so3
from handeyecov.noise import make_rng


def pytest_collection_modifyitems(config, items):
    if config.getoption("-m"):
        return
    skip = pytest.mark.skip(reason="full Monte-Carlo run; select with -m slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def profiles_dir(tmp_path, monkeypatch):
    """Keeps noise profiles out of the user's data directory."""
    path = tmp_path / "profiles"
    monkeypatch.setattr(profiles, "PROFILES_DIR", path)
    return path


@pytest.fixture
def rng():
    return make_rng(12345)


def _random_rotations(rng, n):
    axes = rng.standard_normal((n, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    return exp_so3(axes * rng.uniform(0.0, np.pi, (n, 1)))


@pytest.fixture
def random_rotations():
    """Draws n rotations with uniform axes and angles in [0, π)."""
    return _random_rotations


@pytest.fixture
def X_true():
    return random_pose(7)


@pytest.fixture
def exact_pairs(X_true):
    return generate_dataset(SyntheticConfig(lam=0.0, k=10, M=1), X_true, seed=3)


@pytest.fixture
def noisy_pairs(X_true):
    return generate_dataset(SyntheticConfig(lam=1e-5, k=30, M=1), X_true, seed=3)
