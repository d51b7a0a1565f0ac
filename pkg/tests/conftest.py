import pathlib

import numpy as np
import pytest

from dyco.graph import GraphSnapshot

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def unit_snapshot(n, edges):
    return GraphSnapshot(node_count=n, edges=tuple(edges), weights=(1.0,) * len(edges))


def random_snapshot(rng, n, p=0.4):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return unit_snapshot(n, edges)


@pytest.fixture
def triangle():
    return unit_snapshot(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def c5():
    return unit_snapshot(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])


@pytest.fixture
def burma14_text():
    return (FIXTURES / "burma14.tsp").read_text()
