"""Static problem description: topology, commodities, feasible paths, distances.

Everything here is immutable after construction and safe to share across
concurrent rollout workers. Node ids are arbitrary strings; all canonical
orderings (node lists, edge lists, path lists) are derived by sorting so that
action-vector slots keep a stable meaning across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Invalid topology / commodity / experiment configuration."""


@dataclass(frozen=True)
class Commodity:
    """One (source, destination, lifetime, arrival-rate) service flow."""

    source: str
    destination: str
    lifetime: int
    rate: float

    def __post_init__(self):
        if self.source == self.destination:
            raise ConfigError(f"commodity source equals destination: {self.source!r}")
        if self.lifetime < 1:
            raise ConfigError(f"commodity lifetime must be >= 1, got {self.lifetime}")
        if self.rate < 0:
            raise ConfigError(f"commodity rate must be >= 0, got {self.rate}")


class Topology:
    """Directed graph with integer per-link capacities.

    Simple directed graph: no self-loops, no duplicate edges. Nodes and edges
    are kept in sorted order; ``out_neighbors`` / ``in_neighbors`` are derived
    adjacency maps.
    """

    def __init__(self, nodes, edges):
        """``nodes``: iterable of node ids; ``edges``: iterable of (i, j, capacity)."""
        self.nodes: tuple[str, ...] = tuple(sorted(set(nodes)))
        node_set = set(self.nodes)
        capacity: dict[tuple[str, str], int] = {}
        for i, j, cap in edges:
            if i not in node_set or j not in node_set:
                raise ConfigError(f"edge ({i!r}, {j!r}) references undeclared node")
            if i == j:
                raise ConfigError(f"self-loop at node {i!r} is not allowed")
            if (i, j) in capacity:
                raise ConfigError(f"duplicate edge ({i!r}, {j!r})")
            cap = int(cap)
            if cap < 0:
                raise ConfigError(f"capacity of edge ({i!r}, {j!r}) must be >= 0")
            capacity[(i, j)] = cap
        self.edges: tuple[tuple[str, str], ...] = tuple(sorted(capacity))
        self.capacity: dict[tuple[str, str], int] = {e: capacity[e] for e in self.edges}
        self.out_neighbors: dict[str, tuple[str, ...]] = {n: () for n in self.nodes}
        self.in_neighbors: dict[str, tuple[str, ...]] = {n: () for n in self.nodes}
        for i, j in self.edges:
            self.out_neighbors[i] = self.out_neighbors[i] + (j,)
            self.in_neighbors[j] = self.in_neighbors[j] + (i,)

    def __repr__(self):
        return f"Topology(|V|={len(self.nodes)}, |E|={len(self.edges)})"


def enumerate_feasible_paths(topology: Topology, commodity: Commodity) -> list[tuple[str, ...]]:
    """All simple source->destination paths with hop count <= the lifetime.

    Returned in canonical deterministic order: by length, then lexicographic
    node sequence. An empty result means the commodity is unserviceable (the
    harness rejects such configs at load time).
    """
    if commodity.source not in topology.out_neighbors:
        raise ConfigError(f"unknown source node {commodity.source!r}")
    if commodity.destination not in topology.out_neighbors:
        raise ConfigError(f"unknown destination node {commodity.destination!r}")

    budget = commodity.lifetime
    dest = commodity.destination
    found: list[tuple[str, ...]] = []
    stack = [commodity.source]
    on_stack = {commodity.source}

    def walk(node):
        if node == dest:
            found.append(tuple(stack))
            return
        if len(stack) - 1 >= budget:
            return
        for nxt in topology.out_neighbors[node]:
            if nxt in on_stack:
                continue
            stack.append(nxt)
            on_stack.add(nxt)
            walk(nxt)
            stack.pop()
            on_stack.remove(nxt)

    walk(commodity.source)
    found.sort(key=lambda p: (len(p), p))
    return found


def path_distance(path, node) -> int:
    """Remaining hop count from ``node`` to the path's destination."""
    try:
        pos = path.index(node)
    except ValueError:
        raise ValueError(f"node {node!r} does not lie on path {path}") from None
    return len(path) - 1 - pos


def effective_lifetime(path, lifetime: int, node) -> int:
    """Slack a packet has to wait in queues: lifetime - dist(node, path) + 1.

    May be <= 0, meaning the packet can no longer reach the destination on
    time over its assigned path.
    """
    if lifetime < 0:
        raise ValueError(f"lifetime must be >= 0, got {lifetime}")
    return lifetime - path_distance(path, node) + 1


@dataclass(frozen=True)
class PathSet:
    """Precomputed feasible paths for every commodity, with index tables.

    ``paths[g]`` is the node sequence of global path ``g``; global order is
    commodity-major, within a commodity the canonical enumeration order.
    ``through_edge[(i, j)]`` lists global path indices using edge (i, j).
    """

    commodities: tuple[Commodity, ...]
    paths: tuple[tuple[str, ...], ...]
    path_commodity: tuple[int, ...]
    by_commodity: tuple[tuple[int, ...], ...]
    through_edge: dict = field(repr=False)

    @classmethod
    def build(cls, topology: Topology, commodities) -> "PathSet":
        commodities = tuple(commodities)
        paths: list[tuple[str, ...]] = []
        path_commodity: list[int] = []
        by_commodity: list[tuple[int, ...]] = []
        for c, com in enumerate(commodities):
            plist = enumerate_feasible_paths(topology, com)
            idxs = tuple(range(len(paths), len(paths) + len(plist)))
            by_commodity.append(idxs)
            paths.extend(plist)
            path_commodity.extend([c] * len(plist))
        through_edge: dict[tuple[str, str], tuple[int, ...]] = {e: () for e in topology.edges}
        for g, path in enumerate(paths):
            for a, b in zip(path[:-1], path[1:]):
                through_edge[(a, b)] = through_edge[(a, b)] + (g,)
        return cls(
            commodities=commodities,
            paths=tuple(paths),
            path_commodity=tuple(path_commodity),
            by_commodity=tuple(by_commodity),
            through_edge=through_edge,
        )

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def paths_for(self, c: int, edge=None):
        """Global indices of commodity ``c``'s paths, optionally through ``edge``."""
        idxs = self.by_commodity[c]
        if edge is None:
            return idxs
        on_edge = set(self.through_edge.get(edge, ()))
        return tuple(g for g in idxs if g in on_edge)

    def distance(self, g: int, node) -> int:
        return path_distance(self.paths[g], node)
