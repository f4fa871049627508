import numpy as np
import pytest

from mra.covariance import CovarianceModel
from mra.geometry import Domain, KnotStrategy, make_tree

CRITERIA = {}


def record(number: int, name: str, ok: bool, detail: str = ""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
    CRITERIA[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])


def jittered_points(rng, n, dim):
    """``n`` points in the unit cube, at most one per cell of a regular grid."""
    if dim == 1:
        return ((np.arange(n) + rng.uniform(0.1, 0.9, n)) / n).reshape(-1, 1)
    k = int(np.ceil(np.sqrt(n)))
    cells = rng.choice(k * k, size=n, replace=False)
    ij = np.column_stack(np.unravel_index(cells, (k, k)))
    return (ij + rng.uniform(0.1, 0.9, (n, 2))) / k


def random_config(seed):
    """A random small M-RA problem: ``(tree, model, S, y)``."""
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 3))
    n = int(rng.integers(50, 301))
    M = int(rng.integers(1, 4))
    J = int(rng.choice([2, 3, 4]))
    r = int(rng.integers(2, 7))
    family = str(rng.choice(["matern15", "exponential"]))
    nugget = float(rng.choice([0.0, 0.05]))
    model = CovarianceModel(family, 1.0 - nugget, float(rng.uniform(0.1, 0.4)), nugget)
    S = jittered_points(rng, n, dim)
    y = rng.standard_normal(n)
    tree = make_tree(Domain.unit(dim), (J,) * M, KnotStrategy("equidistant-interior", r), S, y)
    return tree, model, S, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
