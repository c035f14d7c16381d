import itertools
from pathlib import Path

import numpy as np
import pytest

from leadform import build_graph

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

FIVE_EDGES = [(5, 2), (5, 4), (2, 3), (4, 3), (3, 1), (4, 1)]
CYCLIC_EDGES = [(3, 2), (2, 1), (1, 2)]
FOUR_MATRIX = np.array(
    [
        [-3.0, 1, 0, 7],
        [0, -4, 2, 0],
        [-3, 0, -4, -2],
        [0, 0, 0, 0],
    ]
)
FOUR_F = np.array([2.0, -1, -2, 1])


@pytest.fixture
def five_agent():
    return build_graph(5, 5, FIVE_EDGES)


@pytest.fixture
def cyclic_graph():
    return build_graph(3, 3, CYCLIC_EDGES)


# -- independent oracles ----------------------------------------------------


def brute_force_has_cycle(n, edges):
    """Try every sequence of distinct vertices as a closed directed walk."""
    es = set(edges)
    for k in range(2, n + 1):
        for seq in itertools.permutations(range(1, n + 1), k):
            if all((seq[t], seq[(t + 1) % k]) in es for t in range(k)):
                return True
    return False


def leibniz_supports(M):
    """Permutations (0-based) with a nonzero entry in every row of M."""
    n = M.shape[0]
    return [p for p in itertools.permutations(range(n)) if all(M[i, p[i]] != 0 for i in range(n))]


def random_graph(rng, n, p):
    return [(j, i) for j in range(1, n + 1) for i in range(1, n + 1) if i != j and rng.random() < p]


def random_rooted_dag(rng, n, extra_p=0.3):
    """Acyclic graph with a spanning tree rooted at agent n.

    Agents are laid out in a random order starting at the leader; each
    follower gets one parent earlier in that order, plus extra forward edges.
    """
    order = [n] + list(rng.permutation(np.arange(1, n)) + 0)
    order = [int(v) for v in order]
    edges = set()
    for pos in range(1, n):
        parent = order[int(rng.integers(0, pos))]
        edges.add((parent, order[pos]))
        for q in range(pos):
            if rng.random() < extra_p:
                edges.add((order[q], order[pos]))
    return sorted(edges)


def random_tree(rng, n):
    return random_rooted_dag(rng, n, extra_p=0.0)
