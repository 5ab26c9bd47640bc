import numpy as np
import pytest

from qstokes.module_rep import BlockModule, PureBlock
from qstokes.series_core import LaurentSeries

Q = 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_matrix(rng, r, scale=1.0):
    return scale * (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)))


def random_block(rng, mu, r):
    """A well-conditioned constant block ``z**mu A``."""
    while True:
        A = np.eye(r) + 0.4 * random_matrix(rng, r)
        if np.linalg.cond(A) < 20:
            return PureBlock(mu, A)


def random_poly(rng, lo, hi, shape, top=None):
    """Random Laurent polynomial on ``lo..hi`` declared up to ``top``."""
    n = hi - lo + 1
    c = rng.normal(size=(n,) + shape) + 1j * rng.normal(size=(n,) + shape)
    return LaurentSeries(lo, c, hi if top is None else top)


def random_module(rng, slopes, ranks, q=Q, degree=3, top=40):
    blocks = [random_block(rng, mu, r) for mu, r in zip(slopes, ranks)]
    U = {}
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            U[(i, j)] = random_poly(rng, 0, degree, (ranks[i], ranks[j]), top)
    return BlockModule(q, blocks, U)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
