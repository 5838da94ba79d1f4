import functools
import warnings

import numpy as np
import pytest

from wkam.kernel import build_kernel
from wkam.model import TorusGrid
from wkam.registry import build_model
from wkam.transform import legendre


@functools.lru_cache(maxsize=None)
def model(spec: str):
    return build_model(spec)


@functools.lru_cache(maxsize=None)
def table(spec: str, n: int, n_p: int = 513, n_v: int = 513, dim: int = 1):
    return legendre(model(spec), TorusGrid.regular(n, dim), n_p, n_v)


@functools.lru_cache(maxsize=None)
def kernel(spec: str, n: int, tau: float, direction: str = "negative", n_p: int = 513,
           n_v: int = 513, dim: int = 1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_kernel(table(spec, n, n_p, n_v, dim), tau, direction)


@pytest.fixture(scope="session")
def build():
    """Cached model / table / kernel factories shared by all test modules."""
    class _B:
        pass

    b = _B()
    b.model, b.table, b.kernel = model, table, kernel
    return b


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
