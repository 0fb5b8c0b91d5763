from pathlib import Path

import pytest

from backend.app.fixtures import write_samples
from backend.app.services.lattice import Lattice


@pytest.fixture(scope="session")
def samples(tmp_path_factory) -> Path:
    """Directory holding the sample family, lattice, expression and config files."""
    directory = tmp_path_factory.mktemp("samples")
    write_samples(directory)
    return directory


@pytest.fixture
def z2() -> Lattice:
    return Lattice.identity(2)
