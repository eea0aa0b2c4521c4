import functools

import numpy as np
import pytest

from compstab.core import Params, make_poiseuille
from compstab.spectral import cheb_grid


@functools.lru_cache(maxsize=None)
def grid(n):
    return cheb_grid(n)


@functools.lru_cache(maxsize=None)
def poiseuille(n):
    return make_poiseuille(grid(n))


def c0_poiseuille(params):
    """Closed-form predicted root for Poiseuille flow (tau = 8/15, beta = 1)."""
    e = params.eps ** (2 / 7)
    t0 = params.t0
    return (4 / 15) * t0 ** 2 * e + np.sqrt(7.5) * np.exp(0.25j * np.pi) * t0 ** -1.5 * e


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_forcing(grid_, seed, decay=0.8, nterms=40):
    """Random Chebyshev series with geometrically decaying coefficients."""
    r = np.random.default_rng(seed)
    a = (r.standard_normal(nterms) + 1j * r.standard_normal(nterms)) * decay ** np.arange(nterms)
    return np.polynomial.chebyshev.chebval(grid_.nodes, a)


TS_PARAMS = Params(1e-5, 0.3, 0.0, 4.0)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
