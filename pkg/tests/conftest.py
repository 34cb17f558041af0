import sys

import numpy as np
import pytest

from tdhf import make_grid, new_state
from tdhf.runner import gaussian_orbital


def random_state(grid, rank, rng, positive=True, width=(0.6, 1.2), spread=None):
    """Rank-``rank`` state built from randomly placed, boosted Gaussians."""
    spread = grid.box_length / 10 if spread is None else spread
    raw = []
    for _ in range(rank):
        center = rng.uniform(-spread, spread, grid.dim)
        momentum = rng.uniform(-1, 1, grid.dim)
        raw.append(gaussian_orbital(grid, center, rng.uniform(*width), momentum)
                   * np.exp(2j * np.pi * rng.uniform()))
    occ = rng.uniform(0.1, 1.0, rank)
    if not positive:
        occ *= rng.choice([-1, 1], rank)
    return new_state(grid, occ, raw)


@pytest.fixture
def rng():
    return np.random.default_rng(20030512)


@pytest.fixture(scope="session")
def grid1d():
    return make_grid(1, 128, 30.0)


@pytest.fixture(scope="session")
def grid3d():
    return make_grid(3, 16, 12.0)


@pytest.fixture
def pair3d(grid3d):
    """Positive rank-2 state of two displaced Gaussians on the 16**3 grid."""
    return new_state(grid3d, [0.6, 0.4], [
        gaussian_orbital(grid3d, (-1.2, 0, 0), 0.75),
        gaussian_orbital(grid3d, (1.2, 0.3, 0), 0.75, (0.5, 0, 0.2))])


@pytest.fixture
def pair1d(grid1d):
    return new_state(grid1d, [0.6, 0.4], [
        gaussian_orbital(grid1d, (-1.5,), 1.0),
        gaussian_orbital(grid1d, (1.5,), 0.8, (0.7,))])


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[number])
