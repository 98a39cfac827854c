"""Observation/action encodings for the centralized router and the
per-interface schedulers, one coding per strategy family.

Raw actor outputs are continuous in [0, 1]; decoding to integer packet counts
happens here (largest-remainder for the router, per-index fraction rounding
against queue contents for schedulers). Preconditions are enforced by
clipping, never rejection, so any raw action maps to a valid one. Capacity
clipping runs in canonical index order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import NetworkEnv, Problem
from .network import PathSet
from .rules import lelf_schedule

MARL_STRATEGIES = ("marl_lt_dsk", "marl_lt_sk", "marl_el_sk", "marl_el_smax", "marl_el_lelf")
RULE_STRATEGIES = ("mwr_el_lelf", "umw_fifo")
ALL_STRATEGIES = MARL_STRATEGIES + RULE_STRATEGIES

# (coding family, action components per observation entry) per strategy.
SCHEDULER_SHAPE = {
    "marl_lt_dsk": ("lt", 3),
    "marl_lt_sk": ("lt", 2),
    "marl_el_sk": ("el", 2),
    "marl_el_smax": ("el", 1),
    "marl_el_lelf": ("el", 1),
    "mwr_el_lelf": ("el", 1),
}


@dataclass(frozen=True)
class Normalizers:
    """Observation scaling: raw counts divided by these before entering MLPs."""

    queue: float
    arrival: float


def default_normalizers(problem: Problem) -> Normalizers:
    return Normalizers(
        queue=float(max(problem.capacities.max(), 1)),
        arrival=float(max(problem.rates.max(), 1.0)),
    )


# -- router ----------------------------------------------------------------

def router_obs_size(problem: Problem) -> int:
    return problem.n_commodities + problem.n_nodes


def encode_router_obs(arrivals: np.ndarray, env: NetworkEnv, norms: Normalizers) -> np.ndarray:
    """[arrivals per commodity] ++ [node congestion], fixed ascending order."""
    return np.concatenate([
        np.asarray(arrivals, dtype=float) / norms.arrival,
        env.node_congestion_vector().astype(float) / norms.queue,
    ])


def largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``weights``.

    Weights summing to ~0 fall back to uniform. Leftover units go to the
    largest fractional remainders, ties to the lowest index.
    """
    weights = np.asarray(weights, dtype=float)
    n = len(weights)
    s = weights.sum()
    probs = weights / s if s > 1e-12 else np.full(n, 1.0 / n)
    shares = probs * total
    base = np.floor(shares).astype(np.int64)
    leftover = int(total - base.sum())
    if leftover > 0:
        rem = shares - base
        order = np.lexsort((np.arange(n), -rem))
        base[order[:leftover]] += 1
    return base


def decode_router_action(raw: np.ndarray, arrivals: np.ndarray, pathset: PathSet) -> np.ndarray:
    """Per commodity, turn path scores into an integer split of its arrivals."""
    assignment = np.zeros(pathset.n_paths, dtype=np.int64)
    for c, idxs in enumerate(pathset.by_commodity):
        idxs = list(idxs)
        assignment[idxs] = largest_remainder(int(arrivals[c]), raw[idxs])
    return assignment


# -- scheduler codings -------------------------------------------------------

@dataclass(frozen=True)
class InterfaceCoding:
    """Flattened queue-view index for one interface, in canonical order.

    ``lt`` family: one entry per (commodity, path through the edge, lifetime
    1..L^c). ``el`` family: one entry per (commodity, path, effective lifetime
    1..EL(p, L^c, i)); ``entry_l`` then holds the equivalent absolute
    lifetime. Entry order is commodity-major, path-canonical, level ascending.
    """

    edge: int
    family: str
    entry_p: np.ndarray
    entry_k: np.ndarray
    entry_l: np.ndarray
    entry_el: np.ndarray  # effective lifetime per entry (lt family included)

    @property
    def size(self) -> int:
        return len(self.entry_p)

    def counts(self, env: NetworkEnv) -> np.ndarray:
        return env.q[self.entry_p, self.entry_k, self.entry_l]


def build_coding(problem: Problem, e: int, family: str) -> InterfaceCoding:
    ps, ks = problem.edge_slots[e]
    entry_p, entry_k, entry_l, entry_el = [], [], [], []
    for p, k in zip(ps, ks):
        lmax = int(problem.path_lifetime[p])
        dist = int(problem.slot_dist[p, k])
        if family == "lt":
            for l in range(1, lmax + 1):
                entry_p.append(p)
                entry_k.append(k)
                entry_l.append(l)
                entry_el.append(l - dist + 1)
        elif family == "el":
            for el in range(1, lmax - dist + 2):  # el in 1..EL(p, L^c, i)
                entry_p.append(p)
                entry_k.append(k)
                entry_l.append(el + dist - 1)
                entry_el.append(el)
        else:
            raise ValueError(f"unknown coding family {family!r}")
    return InterfaceCoding(
        edge=e,
        family=family,
        entry_p=np.array(entry_p, dtype=np.int64),
        entry_k=np.array(entry_k, dtype=np.int64),
        entry_l=np.array(entry_l, dtype=np.int64),
        entry_el=np.array(entry_el, dtype=np.int64),
    )


def encode_scheduler_obs(env: NetworkEnv, coding: InterfaceCoding, norms: Normalizers) -> np.ndarray:
    return coding.counts(env).astype(float) / norms.queue


# -- action application ------------------------------------------------------

def clip_to_capacity(forward: np.ndarray, capacity: int) -> np.ndarray:
    """Truncate forward counts so their running total never exceeds capacity,
    keeping earlier (canonical) entries whole."""
    cum = np.cumsum(forward)
    before = cum - forward
    allowed = np.clip(capacity - before, 0, None)
    return np.minimum(forward, allowed).astype(np.int64)


def _split_counts(counts: np.ndarray, fractions: np.ndarray) -> np.ndarray:
    """Allocate each entry's count across action components (rows of
    ``fractions``) by largest remainder."""
    n, parts = fractions.shape
    out = np.zeros((n, parts), dtype=np.int64)
    for i in range(n):
        if counts[i] > 0:
            out[i] = largest_remainder(int(counts[i]), fractions[i])
    return out


def apply_scheduler_action_dsk(coding: InterfaceCoding, raw: np.ndarray,
                               env: NetworkEnv, capacity: int):
    """[drop, forward, keep] triples per entry; clip forward to capacity."""
    counts = coding.counts(env)
    split = _split_counts(counts, raw.reshape(-1, 3))
    drop, fwd = split[:, 0], split[:, 1]
    fwd = clip_to_capacity(fwd, capacity)  # clipped packets stay queued
    return fwd, drop


def apply_scheduler_action_sk(coding: InterfaceCoding, raw: np.ndarray,
                              env: NetworkEnv, capacity: int):
    """[forward, keep] pairs per entry; no proactive drops."""
    counts = coding.counts(env)
    split = _split_counts(counts, raw.reshape(-1, 2))
    fwd = clip_to_capacity(split[:, 0], capacity)
    return fwd, np.zeros_like(fwd)


# Same pair decode; the coding (lt vs el) is what differs.
apply_scheduler_action_el_sk = apply_scheduler_action_sk


def smax_sweep(probs: np.ndarray, counts: np.ndarray, res: int,
               rng: np.random.Generator) -> np.ndarray:
    """One selection sweep: per entry (canonical order) dequeue at most one
    packet with its probability, stopping once ``res`` packets are taken."""
    draws = rng.random(len(probs))
    hits = np.nonzero((counts > 0) & (draws < probs))[0]
    take = np.zeros_like(counts)
    take[hits[:res]] = 1
    return take


def apply_scheduler_action_smax(coding: InterfaceCoding, probs: np.ndarray,
                                env: NetworkEnv, capacity: int,
                                rng: np.random.Generator):
    """Repeated sweeps dequeuing single packets with probability ``probs``.

    Sweeps continue until capacity is exhausted or no nonempty entry has
    positive probability. A sweep cap bounds pathological all-but-zero
    probability vectors; it is far beyond anything reachable at realistic
    probability scales.
    """
    counts = coding.counts(env).copy()
    fwd = np.zeros_like(counts)
    res = int(capacity)
    probs = np.asarray(probs, dtype=float)
    max_sweeps = 64 * (int(capacity) + 1)
    for _ in range(max_sweeps):
        if res <= 0:
            break
        if not ((counts > 0) & (probs > 0)).any():
            break
        take = smax_sweep(probs, counts, res, rng)
        fwd += take
        counts -= take
        res -= int(take.sum())
    return fwd, np.zeros_like(fwd)


def apply_scheduler_action_el_lelf(coding: InterfaceCoding, raw: np.ndarray,
                                   env: NetworkEnv, capacity: int):
    """Per-entry forward caps consumed in ascending effective-lifetime order.

    Raw fractions are rounded against queue contents; a cap of everything
    (raw = 1) reduces to the pure LELF rule.
    """
    counts = coding.counts(env)
    caps = np.floor(np.asarray(raw, dtype=float) * counts + 0.5).astype(np.int64)
    caps = np.minimum(caps, counts)
    fwd = lelf_schedule(coding.entry_el, caps, capacity)
    return fwd, np.zeros_like(fwd)


def scatter_entry_flows(problem: Problem, coding: InterfaceCoding,
                        fwd: np.ndarray, drop: np.ndarray, flows: np.ndarray,
                        drops: np.ndarray):
    """Accumulate per-entry counts into the dense (P, K, L+1) action arrays."""
    np.add.at(flows, (coding.entry_p, coding.entry_k, coding.entry_l), fwd)
    if drop is not None and drop.any():
        np.add.at(drops, (coding.entry_p, coding.entry_k, coding.entry_l), drop)


# -- size / complexity accounting ---------------------------------------------

def accounting_report(strategy: str, problem: Problem) -> dict:
    """Observation/action sizes and complexity classes per agent.

    Sizes come from the actual coding tables; they must equal the symbolic
    formulas (per commodity: L^c * |P^c_ij| under lifetime indexing,
    sum of EL(p, L^c, i) under effective-lifetime indexing, action size a
    strategy-dependent multiple).
    """
    if strategy not in SCHEDULER_SHAPE:
        raise ValueError(f"no accounting row for strategy {strategy!r}")
    family, mult = SCHEDULER_SHAPE[strategy]
    m1, m2 = 128, 64
    mlp_based = strategy in ("marl_lt_dsk", "marl_lt_sk", "marl_el_sk", "marl_el_smax")
    apply_class = {
        "marl_lt_dsk": "O(|P|*|L|*3)",
        "marl_lt_sk": "O(|P|*|L|*2)",
        "marl_el_sk": "O(|P|*max_el*2)",
        "marl_el_smax": "O(|q_i|*|P|*max_el)",
        "marl_el_lelf": "O(|q_i|*|P|*max_el)",
        "mwr_el_lelf": "O(|q_i|*|P|*max_el)",
    }[strategy]
    rows = []
    for e, edge in enumerate(problem.edge_ids):
        coding = build_coding(problem, e, family)
        obs, act = coding.size, coding.size * mult
        rows.append({
            "edge": edge,
            "observation": obs,
            "action": act,
            "mlp": f"O({obs}*{m1} + {m1}*{m2} + {m2}*{act})" if mlp_based else "--",
            "apply": apply_class,
        })
    router = {
        "observation": router_obs_size(problem),
        "action": problem.n_paths,
        "mlp": (f"O({router_obs_size(problem)}*{m1} + {m1}*{m2} + {m2}*{problem.n_paths})"
                if strategy != "mwr_el_lelf" else "--"),
        "apply": "O(|P|)" if strategy != "mwr_el_lelf" else "O(2*|P|*|E| + |P|)",
    }
    return {"strategy": strategy, "router": router, "schedulers": rows}
