"""Shared run fixtures. Runs are cached per session; tests must not mutate."""

import numpy as np
import pytest

from qwave import coefficient_model, make_bump, run


@pytest.fixture(scope="session")
def linear_run_small():
    """a = 1, eps = 0.1 displacement bump, N = 1024, R = 16, T = 10."""
    model = coefficient_model("constant")
    f, g = make_bump(0.1, "displacement", 16 / 1024, 1024)
    return run(f, g, model, T=10.0, cfl=0.9, sample_dt=0.5, r_max=16.0,
               meta={"epsilon": 0.1, "K": 8.0})


@pytest.fixture(scope="session")
def quasi_run_small():
    """a = 1 + u, eps = 0.01 bump, N = 2048, R = 32, T = 20."""
    model = coefficient_model("one_plus_u")
    f, g = make_bump(0.01, "displacement", 32 / 2048, 2048)
    return run(f, g, model, T=20.0, cfl=0.9, sample_dt=0.5, r_max=32.0,
               meta={"epsilon": 0.01, "K": 3.0})


@pytest.fixture(scope="session")
def linear_acceptance_run():
    """a = 1, eps = 0.1 bump, N = 4096, R = 16, T = 10 (acceptance scale)."""
    model = coefficient_model("constant")
    f, g = make_bump(0.1, "displacement", 16 / 4096, 4096)
    return run(f, g, model, T=10.0, cfl=0.9, sample_dt=0.5, r_max=16.0,
               meta={"epsilon": 0.1, "K": 8.0})


@pytest.fixture(scope="session")
def quasi_acceptance_run():
    """a = 1 + u, eps = 0.01, K = 3: N = 4096, R = 64, T = 50."""
    model = coefficient_model("one_plus_u")
    f, g = make_bump(0.01, "displacement", 64 / 4096, 4096)
    return run(f, g, model, T=50.0, cfl=0.9, sample_dt=0.5, r_max=64.0,
               meta={"epsilon": 0.01, "K": 3.0})


@pytest.fixture(scope="session")
def quasi_acceptance_refined():
    """Same data as quasi_acceptance_run at half the spacing."""
    model = coefficient_model("one_plus_u")
    f, g = make_bump(0.01, "displacement", 64 / 8192, 8192)
    return run(f, g, model, T=50.0, cfl=0.9, sample_dt=0.5, r_max=64.0,
               meta={"epsilon": 0.01, "K": 3.0})


def l2_node(values, h):
    return float(np.sqrt(h * np.sum(np.asarray(values) ** 2)))
