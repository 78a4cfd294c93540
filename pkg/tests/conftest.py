import numpy as np
import pytest

from scatterkit.linop import SpectralParameter
from scatterkit.modelspace import ModelConfig, build_flat_model


def flat_system(seed=1, n=3, dim=8, s=0.3, kind="dense_hermitian", **kw):
    return build_flat_model(ModelConfig(n_particles=n, dim=dim, seed=seed, coupling_scale=s,
                                        potential_kind=kind, **kw))


def rel(a, b):
    nb = np.linalg.norm(b, 2)
    return np.linalg.norm(a - b, 2) / nb if nb > 0 else np.linalg.norm(a, 2)


@pytest.fixture
def system3():
    return flat_system(seed=3)


@pytest.fixture
def zpoint():
    return SpectralParameter(4.3, 0.4)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
