import warnings

import numpy as np
import pytest

from nfisac import optimizer, pipeline
from nfisac.config import load_shipped
from nfisac.scenario import Scenario

warnings.filterwarnings("ignore", module="cvxpy")


@pytest.fixture(scope="session")
def ref_config():
    return load_shipped()


@pytest.fixture(scope="session")
def ref(ref_config):
    return Scenario(ref_config)


@pytest.fixture(scope="session")
def solutions(ref):
    """Recovered solutions of the three schemes on the reference scenario."""
    return {s: pipeline.solve_scheme(ref, s) for s in ("proposed", "nccs", "ffbf")}


@pytest.fixture(scope="session")
def sensing_runs(ref, solutions):
    """Capon grids for each scheme with the configured block length and seed."""
    from nfisac.capon import SpatialGrid
    grid = SpatialGrid.from_spec(ref.config.grid)
    out = {}
    for name, sol in solutions.items():
        X, Y = pipeline.simulate(ref, sol, ref.config.block_length, ref.config.seed)
        out[name] = pipeline.capon_map(ref, X, Y, grid, ref.config.diagonal_loading)
    return out


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_psd(rng, n, rank=None):
    a = crandn(rng, n, rank or n)
    return a @ a.conj().T


def random_problem(rng, n, K=2, L=2, r_min=2.0, p_max=1.0, noise=1e-2, pairs=True, eps=0.5):
    hu = crandn(rng, K, n)
    ht = crandn(rng, L, n)
    w = optimizer.assemble_scenario_weights(ht, eps)
    return optimizer.DesignProblem(hu, ht, w, p_max, np.full(K, noise), np.full(K, r_min),
                                   optimizer.all_pairs(L) if pairs else (), label="random")


def pytest_terminal_summary(terminalreporter):
    import sys
    results = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            results = getattr(mod, "RESULTS", []) or results
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
