"""Global test configuration and fixtures."""
import pytest
from pathlib import Path

from spike_slab_eb.slab import SlabModel, build_density


@pytest.fixture(autouse=True)
def mock_config_file(monkeypatch):
    """
    Point Path.home() at the repository so Config() reads the test config in
    .spike_slab_eb/config.yml instead of the user's own settings.

    The test config disables the on-disk table cache.
    """
    def mock_home():
        return Path(__file__).parent.parent

    monkeypatch.setattr(Path, "home", mock_home)
    monkeypatch.delenv("SPIKE_SLAB_EB_WORKERS", raising=False)


def _density(**kwargs):
    return build_density(SlabModel(**kwargs), n_max=10 ** 6, grid_step=0.005, cache_dir=None)


@pytest.fixture(scope="session")
def g_half():
    """heavy_tail slab with delta = 0.5, the package default."""
    return _density(family="heavy_tail", delta=0.5)


@pytest.fixture(scope="session")
def g_one():
    return _density(family="heavy_tail", delta=1.0)


@pytest.fixture(scope="session")
def g_fifth():
    return _density(family="heavy_tail", delta=0.2)


@pytest.fixture(scope="session")
def g_laplace():
    return _density(family="laplace", scale=1.0)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240617)
