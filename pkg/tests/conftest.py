import numpy as np
import pytest

from stablab.geometry import build_grids
from stablab.scenario import REDUCED_CONFIG_OVERRIDES, load_scenario


@pytest.fixture(scope="session")
def s1():
    sc = load_scenario("builtin:S1")
    model, profile, pert, res = sc.build()
    return sc, model, profile, res


@pytest.fixture(scope="session")
def s1_grid(s1):
    _, _, profile, res = s1
    return build_grids(profile, res)


@pytest.fixture(scope="session")
def s2():
    sc = load_scenario("builtin:S2")
    model, profile, pert, res = sc.build()
    return sc, model, profile, res


@pytest.fixture(scope="session")
def s1p1_reduced():
    sc = load_scenario("builtin:S1-P1").with_config(**REDUCED_CONFIG_OVERRIDES)
    model, profile, pert, res = sc.build()
    return sc, model, profile, pert, res


@pytest.fixture(scope="session")
def s1p1_grid(s1p1_reduced):
    _, _, profile, _, res = s1p1_reduced
    return build_grids(profile, res)


def dense_resolvent_matrix(entries, b, c, lam):
    """Oracle: (lam - (diag(entries) + b c*))^{-1} as a dense matrix."""
    n = len(entries)
    mat = np.diag(lam - entries).astype(complex)
    if b is not None:
        mat -= np.outer(b, np.conj(c))
    return np.linalg.inv(mat)
