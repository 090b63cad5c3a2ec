import numpy as np
import pytest

from dynppr.graph import Graph


@pytest.fixture
def diamond():
    """4-node graph used for hand calculations.

    0 -> 1, 0 -> 2, 1 -> 3, 2 -> 3, 3 -> 0 (a diamond with a return edge).
    """
    u = np.array([0, 0, 1, 2, 3])
    v = np.array([1, 2, 3, 3, 0])
    return Graph.from_edges(u, v)


@pytest.fixture
def chain2():
    """0 -> 1 and node 1 dangling."""
    return Graph.from_edges([0], [1], num_nodes=2)
