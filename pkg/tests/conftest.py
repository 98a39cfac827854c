import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ttlroute.env import Problem
from ttlroute.network import Commodity, Topology


def line3_topology():
    return Topology(["a", "b", "c"], [("a", "b", 10), ("b", "c", 10)])


def diamond_topology():
    return Topology(["A", "B", "C", "D"],
                    [("A", "B", 10), ("A", "C", 10), ("B", "D", 10), ("C", "D", 10)])


def seven_node_topology(capacity=10):
    """Representative 7-node, 2-commodity substrate (shipped default config)."""
    nodes = ["s1", "s2", "u", "v", "w", "d1", "d2"]
    edges = [
        ("s1", "u", capacity), ("u", "d1", capacity),
        ("s2", "v", capacity), ("v", "d2", capacity),
        ("s1", "w", capacity), ("s2", "w", capacity),
        ("w", "u", capacity), ("w", "v", capacity),
        ("v", "d1", capacity), ("u", "d2", capacity),
    ]
    return Topology(nodes, edges)


def seven_node_problem(lifetime=5, rate=6.0):
    coms = [
        Commodity("s1", "d1", lifetime, rate),
        Commodity("s2", "d2", lifetime, rate),
    ]
    return Problem(seven_node_topology(), coms)


def tiny3_problem(rate=8.0):
    """3-node, 2-path instance with a capacity-1 relay bottleneck."""
    topo = Topology(["a", "b", "d"], [("a", "d", 10), ("a", "b", 10), ("b", "d", 1)])
    return Problem(topo, [Commodity("a", "d", 3, rate)])


def random_problem(rng, max_nodes=6, n_commodities=1, max_lifetime=5):
    """Random small connected-ish instance with every commodity serviceable."""
    while True:
        n = int(rng.integers(3, max_nodes + 1))
        nodes = [f"n{i}" for i in range(n)]
        edges = []
        for i in range(n):
            for j in range(n):
                if i != j and rng.random() < 0.5:
                    edges.append((nodes[i], nodes[j], int(rng.integers(1, 11))))
        if not edges:
            continue
        topo = Topology(nodes, edges)
        coms = []
        tries = 0
        while len(coms) < n_commodities and tries < 40:
            tries += 1
            s, d = rng.choice(n, size=2, replace=False)
            life = int(rng.integers(2, max_lifetime + 1))
            com = Commodity(nodes[s], nodes[d], life, float(rng.integers(1, 5)))
            from ttlroute.network import enumerate_feasible_paths
            if enumerate_feasible_paths(topo, com):
                coms.append(com)
        if len(coms) == n_commodities:
            return Problem(topo, coms)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
