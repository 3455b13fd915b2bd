"""Shared seeded instances, cached per session (the exact level sweep is the
expensive part; most tests only read the results)."""

import pytest

from terracut import division, oracle
from terracut.gen import random_planes


@pytest.fixture(scope="session")
def planes12():
    return random_planes(12, 1)


@pytest.fixture(scope="session")
def planes20():
    return random_planes(20, 2)


@pytest.fixture(scope="session")
def planes40():
    return random_planes(40, 3)


@pytest.fixture(scope="session")
def level40(planes40):
    return oracle.exact_k_level(planes40, 3)


@pytest.fixture(scope="session")
def graph40(level40):
    return division.terrain_to_graph(level40)


@pytest.fixture(scope="session")
def division40(graph40):
    return division.kappa_division(graph40, 36)
