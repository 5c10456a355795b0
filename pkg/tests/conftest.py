"""Session fixtures for spectra that are expensive to assemble."""

from __future__ import annotations

import pytest

from ptwigner.hamiltonian import assemble
from ptwigner.spectrum import eigendecompose


@pytest.fixture(scope="session")
def matrix_15():
    return assemble(1.5, 71)


@pytest.fixture(scope="session")
def spectrum_15(matrix_15):
    return eigendecompose(matrix_15)


@pytest.fixture(scope="session")
def spectrum_140():
    return eigendecompose(assemble(1.40, 71))


@pytest.fixture(scope="session")
def spectrum_2():
    return eigendecompose(assemble(2.0, 31))
