"""Discrete-time environment: path-indexed lifetime queues and one-slot dynamics.

Queue counts live in a dense array ``q[p, k, l]``: packets assigned to global
path ``p``, currently at the node in position ``k`` of that path, with
residual lifetime ``l``. The destination (last position) never holds packets:
packets forwarded into it are consumed as deliveries. Lifetimes decrement for
everyone at the slot boundary; packets reaching lifetime 0 are dropped, and in
effective-lifetime mode so are packets whose remaining slack is gone.

Event order within a slot (fixed for determinism): arrivals are admitted
first, schedulers act on queues including this slot's arrivals, then lifetimes
age at the slot boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Commodity, ConfigError, PathSet, Topology


class StepViolation(RuntimeError):
    """A control action violated availability, capacity, or an admit contract."""


class Problem:
    """Numeric view of (topology, commodities, feasible paths).

    Index conventions used everywhere downstream:
      * commodities ``c`` in declaration order,
      * nodes and edges in sorted order,
      * global paths ``g`` commodity-major, canonical enumeration order within,
      * path positions ``k`` with 0 = source, ``hops[g]`` = destination,
      * lifetimes ``l`` in 1..L_max (index 0 is the expiry bucket).
    """

    def __init__(self, topology: Topology, commodities):
        self.topology = topology
        self.commodities = tuple(commodities)
        self.pathset = PathSet.build(topology, self.commodities)
        for c, idxs in enumerate(self.pathset.by_commodity):
            if not idxs:
                com = self.commodities[c]
                raise ConfigError(
                    f"commodity {c} ({com.source!r}->{com.destination!r}, "
                    f"lifetime {com.lifetime}) has no feasible path"
                )

        self.node_ids = topology.nodes
        self.node_index = {n: i for i, n in enumerate(self.node_ids)}
        self.edge_ids = topology.edges
        self.edge_index = {e: i for i, e in enumerate(self.edge_ids)}
        self.capacities = np.array([topology.capacity[e] for e in self.edge_ids], dtype=np.int64)

        self.n_nodes = len(self.node_ids)
        self.n_edges = len(self.edge_ids)
        self.n_commodities = len(self.commodities)
        self.n_paths = self.pathset.n_paths
        self.rates = np.array([c.rate for c in self.commodities], dtype=float)
        self.lifetimes = np.array([c.lifetime for c in self.commodities], dtype=np.int64)
        self.L_max = int(self.lifetimes.max())

        paths = self.pathset.paths
        self.hops = np.array([len(p) - 1 for p in paths], dtype=np.int64)
        self.max_hops = int(self.hops.max())
        self.path_lifetime = np.array(
            [self.commodities[self.pathset.path_commodity[g]].lifetime for g in range(self.n_paths)],
            dtype=np.int64,
        )
        self.path_commodity = np.array(self.pathset.path_commodity, dtype=np.int64)

        P, K, L = self.n_paths, self.max_hops, self.L_max
        self.slot_valid = np.zeros((P, K), dtype=bool)
        self.slot_node = np.full((P, K), -1, dtype=np.int64)
        self.slot_edge = np.full((P, K), -1, dtype=np.int64)
        self.slot_dist = np.zeros((P, K), dtype=np.int64)  # hops remaining to destination
        self.path_edge_pos = np.full((P, self.n_edges), -1, dtype=np.int64)
        for g, path in enumerate(paths):
            for k in range(len(path) - 1):
                e = self.edge_index[(path[k], path[k + 1])]
                self.slot_valid[g, k] = True
                self.slot_node[g, k] = self.node_index[path[k]]
                self.slot_edge[g, k] = e
                self.slot_dist[g, k] = len(path) - 1 - k
                self.path_edge_pos[g, e] = k
        self.deliver_slot = self.slot_valid & (self.slot_dist == 1)

        # Per-edge and per-node slot gathers, in canonical (path, position) order.
        self.edge_slots = []
        for e in range(self.n_edges):
            ps, ks = np.nonzero(self.slot_edge == e)
            self.edge_slots.append((ps, ks))
        self.node_slots = []
        for n in range(self.n_nodes):
            ps, ks = np.nonzero(self.slot_valid & (self.slot_node == n))
            self.node_slots.append((ps, ks))

        # Lifetime-index validity: 1 <= l <= L^c of the path's commodity.
        ll = np.arange(L + 1)
        self.life_valid = (
            self.slot_valid[:, :, None]
            & (ll[None, None, :] >= 1)
            & (ll[None, None, :] <= self.path_lifetime[:, None, None])
        )
        # Effective lifetime per (p, k, l): l - dist + 1 (only meaningful on valid slots).
        self.slot_el = ll[None, None, :] - self.slot_dist[:, :, None] + 1
        # Entries killed by effective-lifetime expiry: EL <= 0 i.e. l <= dist - 1.
        self.el_dead = self.life_valid & (self.slot_el <= 0)

    def effective_lifetime_of(self, g: int, k: int, lifetime: int) -> int:
        return int(lifetime - self.slot_dist[g, k] + 1)


@dataclass
class PacketRec:
    """Per-packet FIFO record, kept only for FIFO-scheduled baselines."""

    path: int
    lifetime: int
    enqueued_at: int


@dataclass
class StepLog:
    """Audit trail of one timeslot: what arrived, moved, dropped, delivered."""

    t: int
    arrivals: np.ndarray        # (C,) exogenous arrivals
    admitted: np.ndarray        # (P,) router assignment actually admitted
    flows: np.ndarray           # (P, K, L+1) packets forwarded out of (p, k, l)
    drops: np.ndarray           # (P, K, L+1) proactive drops
    expired: np.ndarray         # (P, K) lifetime hit 0 at the slot boundary
    el_expired: np.ndarray      # (P, K, L+1) effective-lifetime expiry (post-shift l)
    deliveries: np.ndarray      # (C, L+1) delivered, keyed by transmission-time lifetime

    @property
    def delivered_total(self) -> int:
        return int(self.deliveries.sum())

    @property
    def dropped_total(self) -> int:
        return int(self.drops.sum() + self.expired.sum() + self.el_expired.sum())


def zero_action(problem: Problem):
    """(flows, drops) arrays of the right shape, all zero."""
    shape = (problem.n_paths, problem.max_hops, problem.L_max + 1)
    return np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=np.int64)


class NetworkEnv:
    """One rollout worker's mutable environment instance.

    Not thread-safe; run independent instances for concurrent rollouts. With
    ``el_mode`` the boundary additionally drops packets whose effective
    lifetime reached 0. With ``track_fifo`` per-packet FIFO records are kept
    per outgoing interface (used by the FIFO-scheduled baseline only).
    """

    def __init__(self, problem: Problem, el_mode: bool = False, track_fifo: bool = False,
                 rng: np.random.Generator | None = None):
        if el_mode and track_fifo:
            raise ConfigError("FIFO record tracking is only used by non-EL strategies")
        self.problem = problem
        self.el_mode = el_mode
        self.track_fifo = track_fifo
        self.rng = rng if rng is not None else np.random.default_rng(0)
        P, K, L = problem.n_paths, problem.max_hops, problem.L_max
        self.q = np.zeros((P, K, L + 1), dtype=np.int64)
        self.t = 0
        self.fifo: list[list[PacketRec]] | None = None
        self.reset()

    def reset(self, rng: np.random.Generator | None = None):
        """Clear all queues and the clock (episode boundary)."""
        self.q[:] = 0
        self.t = 0
        if rng is not None:
            self.rng = rng
        self.fifo = [[] for _ in range(self.problem.n_edges)] if self.track_fifo else None
        return self

    # -- slot phases ------------------------------------------------------

    def sample_arrivals(self) -> np.ndarray:
        """Independent Poisson draws, one per commodity."""
        return self.rng.poisson(self.problem.rates).astype(np.int64)

    def admit(self, arrivals: np.ndarray, assignment: np.ndarray):
        """Enqueue this slot's arrivals at their sources with full lifetime.

        ``assignment[g]`` packets enter queue (source of path g, lifetime L^c).
        Per commodity the assignment must sum to the arrival count.
        """
        pr = self.problem
        assignment = np.asarray(assignment, dtype=np.int64)
        if assignment.shape != (pr.n_paths,):
            raise StepViolation(f"assignment shape {assignment.shape} != ({pr.n_paths},)")
        if (assignment < 0).any():
            g = int(np.argmax(assignment < 0))
            raise StepViolation(f"negative assignment on path {g}")
        for c in range(pr.n_commodities):
            idxs = list(pr.pathset.by_commodity[c])
            total = int(assignment[idxs].sum())
            if total != int(arrivals[c]):
                raise StepViolation(
                    f"commodity {c}: assignment sums to {total}, arrivals are {int(arrivals[c])}"
                )
        for g in range(pr.n_paths):
            n = int(assignment[g])
            if n == 0:
                continue
            self.q[g, 0, pr.path_lifetime[g]] += n
            if self.fifo is not None:
                e = pr.slot_edge[g, 0]
                self.fifo[e].extend(
                    PacketRec(g, int(pr.path_lifetime[g]), self.t) for _ in range(n)
                )
        return assignment

    def apply_flows(self, flows: np.ndarray, drops: np.ndarray,
                    fifo_plan=None) -> np.ndarray:
        """Move/drop packets; returns per-(commodity, lifetime) deliveries.

        Preconditions checked with zero tolerance:
          availability  flows + drops <= current queue count at every index,
          capacity      per-edge forwarded total <= link capacity,
          placement     flows/drops only on valid (p, k, l >= 1) indices.
        Any violation aborts the slot with a diagnostic naming the offender.
        """
        pr = self.problem
        self._validate_action(flows, drops)

        delivered = flows * pr.deliver_slot[:, :, None]
        deliveries = np.zeros((pr.n_commodities, pr.L_max + 1), dtype=np.int64)
        if delivered.any():
            per_path = delivered.sum(axis=1)  # (P, L+1)
            for c in range(pr.n_commodities):
                sel = pr.path_commodity == c
                deliveries[c] = per_path[sel].sum(axis=0)

        self.q -= flows + drops
        moved = flows * (pr.slot_valid & ~pr.deliver_slot)[:, :, None]
        if moved.any():
            self.q[:, 1:, :] += moved[:, :-1, :]

        if self.fifo is not None:
            self._apply_fifo_plan(fifo_plan if fifo_plan is not None else {}, flows)
        return deliveries

    def expire_and_advance(self):
        """Age every held packet one slot; drop expired (and EL-dead) ones."""
        pr = self.problem
        expired = self.q[:, :, 1].copy()
        self.q[:, :, :-1] = self.q[:, :, 1:]
        self.q[:, :, -1] = 0
        self.q[:, :, 0] = 0
        el_expired = np.zeros_like(self.q)
        if self.el_mode:
            el_expired = np.where(pr.el_dead, self.q, 0)
            self.q -= el_expired
        if self.fifo is not None:
            for recs in self.fifo:
                kept = []
                for r in recs:
                    r.lifetime -= 1
                    if r.lifetime > 0:
                        kept.append(r)
                recs[:] = kept
        self.t += 1
        return expired, el_expired

    def step(self, strategy) -> StepLog:
        """One full timeslot driven by ``strategy`` (route + schedule)."""
        arrivals = self.sample_arrivals()
        assignment = strategy.route(arrivals, self)
        self.admit(arrivals, assignment)
        flows, drops, fifo_plan = strategy.schedule(self)
        deliveries = self.apply_flows(flows, drops, fifo_plan)
        expired, el_expired = self.expire_and_advance()
        return StepLog(
            t=self.t - 1,
            arrivals=arrivals,
            admitted=assignment,
            flows=flows,
            drops=drops,
            expired=expired,
            el_expired=el_expired,
            deliveries=deliveries,
        )

    # -- observations ------------------------------------------------------

    def congestion(self, node=None, edge=None) -> int:
        """Total packet count at a node, or waiting to traverse an interface."""
        if (node is None) == (edge is None):
            raise ValueError("pass exactly one of node= or edge=")
        pr = self.problem
        if node is not None:
            ps, ks = pr.node_slots[pr.node_index[node]]
        else:
            ps, ks = pr.edge_slots[pr.edge_index[edge]]
        return int(self.q[ps, ks, :].sum())

    def node_congestion_vector(self) -> np.ndarray:
        out = np.zeros(self.problem.n_nodes, dtype=np.int64)
        per_slot = self.q.sum(axis=2)
        for n in range(self.problem.n_nodes):
            ps, ks = self.problem.node_slots[n]
            out[n] = per_slot[ps, ks].sum()
        return out

    def edge_view(self, e: int) -> np.ndarray:
        """Copy of the queue counts for interface ``e``: shape (n_slots, L+1)."""
        ps, ks = self.problem.edge_slots[e]
        return self.q[ps, ks, :].copy()

    def total_queued(self) -> int:
        return int(self.q.sum())

    # -- internals ---------------------------------------------------------

    def _validate_action(self, flows: np.ndarray, drops: np.ndarray):
        pr = self.problem
        shape = self.q.shape
        if flows.shape != shape or drops.shape != shape:
            raise StepViolation(f"flow/drop arrays must have shape {shape}")
        for name, arr in (("flow", flows), ("drop", drops)):
            if (arr < 0).any():
                g, k, l = np.unravel_index(int(np.argmin(arr)), shape)
                raise StepViolation(f"negative {name} at path {g}, position {k}, lifetime {l}")
            bad = arr.astype(bool) & ~pr.life_valid
            if bad.any():
                g, k, l = np.unravel_index(int(np.argmax(bad)), shape)
                raise StepViolation(
                    f"{name} on invalid index: path {g}, position {k}, lifetime {l}"
                )
        over = flows + drops > self.q
        if over.any():
            g, k, l = np.unravel_index(int(np.argmax(over)), shape)
            i, j = self._edge_of(g, k)
            raise StepViolation(
                "availability violated at "
                f"({i},{j}) commodity {int(pr.path_commodity[g])} path {g} lifetime {l}: "
                f"flow {int(flows[g, k, l])} + drop {int(drops[g, k, l])} > "
                f"queue {int(self.q[g, k, l])}"
            )
        flat_edges = pr.slot_edge.ravel()
        ok = flat_edges >= 0
        per_edge = np.bincount(
            flat_edges[ok], weights=flows.sum(axis=2).ravel()[ok], minlength=pr.n_edges
        ).astype(np.int64)
        over_cap = per_edge > pr.capacities
        if over_cap.any():
            e = int(np.argmax(over_cap))
            i, j = pr.edge_ids[e]
            raise StepViolation(
                f"capacity violated on ({i},{j}): {int(per_edge[e])} > {int(pr.capacities[e])}"
            )

    def _edge_of(self, g: int, k: int):
        e = int(self.problem.slot_edge[g, k])
        return self.problem.edge_ids[e] if e >= 0 else ("?", "?")

    def _apply_fifo_plan(self, fifo_plan, flows):
        """Move per-packet records along with the count flows (FIFO baseline)."""
        pr = self.problem
        arrival_buf: list[list[PacketRec]] = [[] for _ in range(pr.n_edges)]
        for e in range(pr.n_edges):
            plan = fifo_plan.get(e, ())
            if not plan:
                continue
            recs = self.fifo[e]
            n_fwd = sum(1 for kind, _ in plan if kind == "fwd")
            ps, _ = pr.edge_slots[e]
            assert n_fwd == int(flows[pr.edge_slots[e][0], pr.edge_slots[e][1], :].sum()), \
                "FIFO plan disagrees with flow counts"
            for kind, rec in plan:
                front = recs.pop(0)
                assert front is rec, "FIFO plan must consume records from the front"
                if kind == "exp":
                    continue  # lazily dropped expired record
                g = rec.path
                k = int(pr.path_edge_pos[g, e])
                if k + 1 < int(pr.hops[g]):
                    nxt = int(pr.slot_edge[g, k + 1])
                    arrival_buf[nxt].append(rec)
                # else consumed at the destination
        for e, new_recs in enumerate(arrival_buf):
            for rec in new_recs:
                rec.enqueued_at = self.t + 1
            self.fifo[e].extend(new_recs)

    def fifo_consistent(self) -> bool:
        """Records' multiset equals the queue counts (baseline invariant)."""
        if self.fifo is None:
            return True
        pr = self.problem
        counts = np.zeros_like(self.q)
        for e, recs in enumerate(self.fifo):
            for r in recs:
                k = int(pr.path_edge_pos[r.path, e])
                counts[r.path, k, r.lifetime] += 1
        return bool((counts == self.q).all())
