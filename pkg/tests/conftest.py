import numpy as np
import pytest

from lcavarsel import FitConfig, from_codes
from lcavarsel.simgen import ScenarioSpec, generate

# acceptance criteria report lines, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def random_dataset(rng, n, n_categories):
    """Random codes in which every category of every column occurs at least once."""
    n_categories = list(n_categories)
    cols = []
    for c in n_categories:
        col = rng.integers(0, c, size=n)
        col[:c] = rng.permutation(c)
        cols.append(col)
    return from_codes(np.column_stack(cols), n_categories)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def fast_fit():
    return FitConfig(n_restarts=4, max_iter=500, rel_tol=1e-8, seed=3)


@pytest.fixture(scope="session")
def scenario1_small():
    return generate(ScenarioSpec(1, 400, seed=11))


@pytest.fixture(scope="session")
def scenario1_1000():
    return generate(ScenarioSpec(1, 1000, seed=5))
