import numpy as np
import pytest

from wigner_solver.config import get_settings
from wigner_solver.models.schemas import BasisSpec
from wigner_solver.services import potential as pot
from wigner_solver.services.dynamics import GridSpec


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Ledger database and default output directory under tmp_path."""
    monkeypatch.setenv("WIGNER_DATABASE_URL", f"sqlite:///{tmp_path / 'ledger.db'}")
    monkeypatch.setenv("WIGNER_OUTPUT_DIR", str(tmp_path / "runs"))
    get_settings.cache_clear()
    yield get_settings()
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spec16():
    return BasisSpec(n_basis=16)


@pytest.fixture
def small_grid():
    return GridSpec(x_min=-3.5, x_max=3.5, nx=100)


@pytest.fixture
def harmonic():
    return pot.harmonic(0.5)


@pytest.fixture
def quartic():
    return pot.anharmonic(0.5, 0.5)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
