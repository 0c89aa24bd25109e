"""Shared fixtures: geometries and solved connections are session-scoped
(immutable after construction, safe to share)."""

import pytest

from fedosov_lab.geometry import make_geometry, su2_action
from fedosov_lab.fedosov import solve_fedosov


@pytest.fixture(scope="session")
def flat():
    return make_geometry("flat:1")


@pytest.fixture(scope="session")
def cp1():
    return make_geometry("cp1-fs")


@pytest.fixture(scope="session")
def su2(cp1):
    return su2_action(cp1)


@pytest.fixture(scope="session")
def conn_flat(flat):
    return solve_fedosov(flat, "zero", N=6)


@pytest.fixture(scope="session")
def conn_zero(cp1):
    return solve_fedosov(cp1, "zero", N=6)


@pytest.fixture(scope="session")
def conn_ric(cp1):
    return solve_fedosov(cp1, "ricci", N=6)
