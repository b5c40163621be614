import numpy as np
import pytest

from geoflow import KernelConfig, build_graph_operators, decompose, sample_flat_torus, sample_sphere

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sphere_small():
    cloud = sample_sphere(200, seed=11)
    ops = build_graph_operators(cloud, KernelConfig(epsilon=0.08, lam=1.0, intrinsic_dim=2))
    return cloud, ops, decompose(ops)


@pytest.fixture(scope="session")
def torus_small():
    cloud = sample_flat_torus(300, seed=5)
    ops = build_graph_operators(cloud, KernelConfig(epsilon=0.2, lam=0.5, intrinsic_dim=2))
    return cloud, ops, decompose(ops)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
