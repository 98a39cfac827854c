"""Independent replay of StepLog records against every dynamics invariant.

This module deliberately re-implements the queue dynamics with plain scalar
dictionaries (no numpy, no shared code with ``env``) so that it can serve as
an independent oracle: it recounts every packet's fate from the logged
arrivals, admissions, flows and drops, and flags any record that could not
have been produced by a legal slot.

Checked with zero tolerance, per slot:
  * admissions sum to arrivals per commodity, on feasible paths only,
  * availability: flows + drops never exceed the reconstructed queue,
  * capacity: per-edge forwarded totals within link capacity,
  * placement: flows only on a path's own edges, forward direction, l >= 1,
  * deliveries only at lifetime >= 1 and only over final hops,
  * logged expiry counts equal the reconstructed ones (incl. EL expiry),
and per episode: arrivals = deliveries + drops (all causes) + leftover queue.
"""

from __future__ import annotations


def steplog_record(log) -> dict:
    """Serialize a StepLog into the archive/audit record form."""
    def sparse(arr):
        out = []
        it = arr.nonzero()
        for idx in zip(*it):
            out.append([int(i) for i in idx] + [int(arr[idx])])
        return out

    return {
        "t": int(log.t),
        "arrivals": [int(x) for x in log.arrivals],
        "admitted": sparse(log.admitted),
        "flows": sparse(log.flows),
        "drops": sparse(log.drops),
        "expired": sparse(log.expired),
        "el_expired": sparse(log.el_expired),
        "deliveries": sparse(log.deliveries),
    }


class EpisodeReplay:
    """Scalar reconstruction of one episode from its records."""

    def __init__(self, problem, el_mode: bool):
        self.pr = problem
        self.el_mode = el_mode
        self.q: dict[tuple[int, int, int], int] = {}
        self.violations: list[str] = []
        self.arrived = 0
        self.delivered = 0
        self.proactive = 0
        self.expired = 0
        self.el_expired = 0

    def _flag(self, t, msg):
        self.violations.append(f"t={t}: {msg}")

    def _path_geom(self, g):
        path = self.pr.pathset.paths[g]
        return len(path) - 1  # hop count

    def apply_record(self, rec: dict):
        pr = self.pr
        t = rec["t"]
        arrivals = rec["arrivals"]
        self.arrived += sum(arrivals)

        admitted_per_c = [0] * pr.n_commodities
        for g, n in rec["admitted"]:
            if n < 0:
                self._flag(t, f"negative admission on path {g}")
            c = pr.pathset.path_commodity[g]
            admitted_per_c[c] += n
            life = pr.commodities[c].lifetime
            key = (g, 0, life)
            self.q[key] = self.q.get(key, 0) + n
        for c in range(pr.n_commodities):
            if admitted_per_c[c] != arrivals[c]:
                self._flag(t, f"commodity {c} admitted {admitted_per_c[c]} != arrivals {arrivals[c]}")

        per_edge: dict[int, int] = {}
        outgo: dict[tuple[int, int, int], int] = {}
        for kind in ("flows", "drops"):
            for p, k, l, n in rec[kind]:
                if n < 0:
                    self._flag(t, f"negative {kind} entry ({p},{k},{l})")
                hops = self._path_geom(p)
                life = pr.commodities[pr.pathset.path_commodity[p]].lifetime
                if not (0 <= k < hops) or not (1 <= l <= life):
                    self._flag(t, f"{kind} on invalid index ({p},{k},{l})")
                    continue
                outgo[(p, k, l)] = outgo.get((p, k, l), 0) + n
                if kind == "flows":
                    path = pr.pathset.paths[p]
                    e = pr.edge_index[(path[k], path[k + 1])]
                    per_edge[e] = per_edge.get(e, 0) + n
        for key, n in outgo.items():
            have = self.q.get(key, 0)
            if n > have:
                self._flag(t, f"availability: {n} leaving {key} but only {have} queued")
        for e, n in per_edge.items():
            if n > int(pr.capacities[e]):
                self._flag(t, f"capacity: {n} > {int(pr.capacities[e])} on edge {pr.edge_ids[e]}")

        deliveries_seen: dict[tuple[int, int], int] = {}
        for p, k, l, n in rec["flows"]:
            key = (p, k, l)
            self.q[key] = self.q.get(key, 0) - n
            hops = self._path_geom(p)
            if k + 1 < hops:
                nxt = (p, k + 1, l)
                self.q[nxt] = self.q.get(nxt, 0) + n
            else:
                if l < 1:
                    self._flag(t, f"delivery with lifetime {l} < 1")
                c = pr.pathset.path_commodity[p]
                deliveries_seen[(c, l)] = deliveries_seen.get((c, l), 0) + n
        for p, k, l, n in rec["drops"]:
            key = (p, k, l)
            self.q[key] = self.q.get(key, 0) - n
            self.proactive += n

        logged = {(c, l): n for c, l, n in rec["deliveries"]}
        if logged != {k: v for k, v in deliveries_seen.items() if v}:
            self._flag(t, f"logged deliveries {logged} != implied {deliveries_seen}")
        for (c, l), n in logged.items():
            if l < 1:
                self._flag(t, f"logged delivery at lifetime {l}")
            self.delivered += n

        # Slot boundary: age, expire, (optionally) EL-expire.
        expired_seen: dict[tuple[int, int], int] = {}
        aged: dict[tuple[int, int, int], int] = {}
        for (p, k, l), n in self.q.items():
            if n == 0:
                continue
            if n < 0:
                self._flag(t, f"negative reconstructed queue at ({p},{k},{l})")
                continue
            if l == 1:
                expired_seen[(p, k)] = expired_seen.get((p, k), 0) + n
            else:
                aged[(p, k, l - 1)] = aged.get((p, k, l - 1), 0) + n
        logged_exp = {(p, k): n for p, k, n in rec["expired"] if n}
        if logged_exp != expired_seen:
            self._flag(t, f"logged expiry {logged_exp} != reconstructed {expired_seen}")
        self.expired += sum(expired_seen.values())

        if self.el_mode:
            el_seen: dict[tuple[int, int, int], int] = {}
            kept: dict[tuple[int, int, int], int] = {}
            for (p, k, l), n in aged.items():
                hops = self._path_geom(p)
                dist = hops - k
                if l - dist + 1 <= 0:
                    el_seen[(p, k, l)] = n
                else:
                    kept[(p, k, l)] = n
            logged_el = {(p, k, l): n for p, k, l, n in rec["el_expired"] if n}
            if logged_el != el_seen:
                self._flag(t, f"logged EL expiry {logged_el} != reconstructed {el_seen}")
            self.el_expired += sum(el_seen.values())
            aged = kept
        elif any(n for _, _, _, n in rec["el_expired"]):
            self._flag(t, "EL expiry logged by a non-EL strategy")
        self.q = aged

    def finish(self) -> dict:
        leftover = sum(self.q.values())
        accounted = self.delivered + self.proactive + self.expired + self.el_expired + leftover
        if accounted != self.arrived:
            self.violations.append(
                f"conservation: arrivals {self.arrived} != deliveries {self.delivered} "
                f"+ drops {self.proactive}+{self.expired}+{self.el_expired} + leftover {leftover}"
            )
        return {
            "violations": self.violations,
            "arrived": self.arrived,
            "delivered": self.delivered,
            "proactive_drops": self.proactive,
            "expired": self.expired,
            "el_expired": self.el_expired,
            "leftover": leftover,
        }


def replay_episode(problem, el_mode: bool, records) -> dict:
    """Replay one episode's records; returns totals and violations."""
    replay = EpisodeReplay(problem, el_mode)
    for rec in records:
        replay.apply_record(rec)
    return replay.finish()
