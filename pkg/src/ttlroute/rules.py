"""Deterministic rule-based control: LELF schedulers, min-weight and
virtual-queue routers, FIFO service.

All functions here are pure given a state view; the routers that keep state
across slots (virtual queues) expose an explicit reset. Tie-breaking is always
(commodity index, path index, lifetime ascending) so the same state maps to
the same action, bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import NetworkEnv, PacketRec, Problem


def lelf_order(els, n_entries: int | None = None) -> np.ndarray:
    """Service order over entries: ascending effective lifetime, ties by
    the entries' given (canonical) order."""
    els = np.asarray(els)
    idx = np.arange(len(els) if n_entries is None else n_entries)
    return np.lexsort((idx, els))


def lelf_schedule(els, counts, capacity: int) -> np.ndarray:
    """Forward counts per entry, lowest effective lifetime first.

    ``els``/``counts`` describe the eligible entries of one interface in
    canonical (commodity, path) order. The returned flow multiset is a prefix
    of the EL-sorted eligible multiset: a level is fully drained before the
    next one is touched, ties broken by entry order.
    """
    els = np.asarray(els, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    out = np.zeros_like(counts)
    res = int(capacity)
    for i in lelf_order(els):
        if res <= 0:
            break
        take = min(int(counts[i]), res)
        out[i] = take
        res -= take
    return out


@dataclass(frozen=True)
class EdgeWeightTable:
    """Per-slot congestion weights: one per edge, summed per path."""

    weight: np.ndarray       # (E,) W_ij
    path_weight: np.ndarray  # (P,) w_p = sum of edge weights along p


def edge_weights(env: NetworkEnv) -> EdgeWeightTable:
    """Congestion weight of each edge from the current queue state.

    Every queued packet contributes (|l - EL(p, l, i)| + 1), i.e. its
    remaining hop distance, to the edge it is waiting to traverse.
    """
    pr = env.problem
    per_packet = np.abs(np.arange(pr.L_max + 1)[None, None, :] - pr.slot_el) + 1
    contrib = env.q * per_packet * pr.life_valid
    per_slot = contrib.sum(axis=2)
    flat_edges = pr.slot_edge.ravel()
    ok = flat_edges >= 0
    weight = np.bincount(flat_edges[ok], weights=per_slot.ravel()[ok], minlength=pr.n_edges)
    on_path = pr.path_edge_pos >= 0  # (P, E)
    path_weight = on_path @ weight
    return EdgeWeightTable(weight=weight, path_weight=path_weight)


def path_bottlenecks(problem: Problem) -> np.ndarray:
    """Per-path bottleneck (minimum edge) capacity."""
    caps = np.where(problem.path_edge_pos >= 0, problem.capacities[None, :], np.iinfo(np.int64).max)
    return caps.min(axis=1)


def mwr_route(arrivals: np.ndarray, env: NetworkEnv) -> np.ndarray:
    """Assign each commodity's arrivals to paths in increasing weight order.

    Each path takes packets up to its bottleneck capacity; the last
    (highest-weight) path absorbs any remainder.
    """
    pr = env.problem
    table = edge_weights(env)
    bottleneck = path_bottlenecks(pr)
    assignment = np.zeros(pr.n_paths, dtype=np.int64)
    for c in range(pr.n_commodities):
        idxs = list(pr.pathset.by_commodity[c])
        order = sorted(range(len(idxs)), key=lambda i: (table.path_weight[idxs[i]], i))
        remaining = int(arrivals[c])
        for rank, i in enumerate(order):
            g = idxs[i]
            if rank == len(order) - 1:
                take = remaining
            else:
                take = min(remaining, int(bottleneck[g]))
            assignment[g] = take
            remaining -= take
            if remaining == 0:
                break
    return assignment


class UmwRouter:
    """Virtual-queue min-cost path selection (max-weight baseline, adapted).

    One virtual backlog per edge: path cost is the sum of backlogs along it.
    Each slot, a commodity's arrivals all go to its current min-cost feasible
    path (ties by canonical order); backlogs then grow by the assigned load
    and drain by the link capacity, never below zero.
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        self.virtual = np.zeros(problem.n_edges, dtype=np.int64)

    def reset(self):
        self.virtual[:] = 0

    def route(self, arrivals: np.ndarray, env: NetworkEnv) -> np.ndarray:
        pr = self.problem
        on_path = pr.path_edge_pos >= 0
        cost = on_path @ self.virtual
        assignment = np.zeros(pr.n_paths, dtype=np.int64)
        for c in range(pr.n_commodities):
            idxs = list(pr.pathset.by_commodity[c])
            best = min(range(len(idxs)), key=lambda i: (cost[idxs[i]], i))
            assignment[idxs[best]] = int(arrivals[c])
        load = on_path.T @ assignment  # (E,) packets assigned across each edge
        self.virtual = np.maximum(self.virtual + load - pr.capacities, 0)
        return assignment


def fifo_schedule(records, capacity: int):
    """FIFO service plan for one interface: oldest enqueued first.

    Walks the queue front, skipping (and dropping) records whose lifetime has
    already run out, forwarding until ``capacity`` packets are chosen or the
    queue is exhausted. Returns an ordered plan of ("fwd" | "exp", record)
    covering exactly the consumed front segment.
    """
    plan: list[tuple[str, PacketRec]] = []
    forwarded = 0
    for rec in records:
        if forwarded >= capacity:
            break
        if rec.lifetime <= 0:
            plan.append(("exp", rec))
            continue
        plan.append(("fwd", rec))
        forwarded += 1
    return plan


def lelf_interface_flows(env: NetworkEnv, e: int, caps=None):
    """LELF flow counts for interface ``e`` as (entry arrays, flows).

    ``caps`` optionally bounds the per-(path, lifetime) forward counts (the
    learned EL-LELF variant); None means unbounded (pure LELF).
    """
    pr = env.problem
    ps, ks = pr.edge_slots[e]
    entry_p, entry_k, entry_l, entry_el = [], [], [], []
    for p, k in zip(ps, ks):
        lmax = int(pr.path_lifetime[p])
        dist = int(pr.slot_dist[p, k])
        for l in range(1, lmax + 1):
            el = l - dist + 1
            if env.el_mode and el <= 0:
                continue
            entry_p.append(p)
            entry_k.append(k)
            entry_l.append(l)
            entry_el.append(el)
    if not entry_p:
        return None
    entry_p = np.array(entry_p)
    entry_k = np.array(entry_k)
    entry_l = np.array(entry_l)
    entry_el = np.array(entry_el)
    counts = env.q[entry_p, entry_k, entry_l]
    if caps is not None:
        counts = np.minimum(counts, caps)
    flows = lelf_schedule(entry_el, counts, int(pr.capacities[e]))
    return entry_p, entry_k, entry_l, flows
