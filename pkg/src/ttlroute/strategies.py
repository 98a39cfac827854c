"""The seven control strategies: five actor-driven, two fully rule-based.

A strategy answers two calls per slot, in order: ``route(arrivals, env)``
(assignment of this slot's arrivals to paths) and ``schedule(env)`` (flow and
drop arrays plus an optional FIFO service plan). ``NetworkEnv.step`` composes
them with the queue dynamics.

Actor-driven strategies hold one params entry per learned agent ('router'
first, then one scheduler per interface in canonical edge order, if that
strategy learns its schedulers). With ``eps`` > 0 each agent independently
plays a uniform-random raw action with that probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import agents as ag
from .env import NetworkEnv, Problem, zero_action
from .nets import HIDDEN_SIZES, Mlp
from .rules import UmwRouter, fifo_schedule, lelf_schedule, mwr_route


@dataclass(frozen=True)
class AgentSpec:
    name: str
    obs_dim: int
    act_dim: int


def scheduler_agent_name(edge) -> str:
    return f"sched_{edge[0]}_{edge[1]}"


def agent_specs(strategy: str, problem: Problem) -> list[AgentSpec]:
    """Learned-agent roster for a strategy (empty for rule-based ones)."""
    if strategy in ag.RULE_STRATEGIES:
        return []
    if strategy not in ag.MARL_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    specs = [AgentSpec("router", ag.router_obs_size(problem), problem.n_paths)]
    if strategy == "marl_el_lelf":
        return specs  # schedulers are rule-based
    family, mult = ag.SCHEDULER_SHAPE[strategy]
    for e, edge in enumerate(problem.edge_ids):
        coding = ag.build_coding(problem, e, family)
        specs.append(AgentSpec(scheduler_agent_name(edge), coding.size, coding.size * mult))
    return specs


def init_actor_params(strategy: str, problem: Problem, rng: np.random.Generator) -> dict:
    """Fresh logistic-output actors for every learned agent of a strategy."""
    return {
        spec.name: Mlp.init(spec.obs_dim, spec.act_dim, rng, HIDDEN_SIZES, "logistic")
        for spec in agent_specs(strategy, problem)
    }


def strategy_flags(name: str) -> dict:
    """Environment flags implied by a strategy name."""
    if name not in ag.ALL_STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}")
    return {
        "el_mode": name in ("marl_el_sk", "marl_el_smax", "marl_el_lelf", "mwr_el_lelf"),
        "track_fifo": name == "umw_fifo",
    }


class MarlStrategy:
    """Actor-driven control; schedulers learned or LELF depending on name."""

    def __init__(self, name: str, problem: Problem, actor_params: dict,
                 norms: ag.Normalizers | None = None,
                 rng: np.random.Generator | None = None, eps: float = 0.0):
        if name not in ag.MARL_STRATEGIES:
            raise ValueError(f"{name!r} is not an actor-driven strategy")
        self.name = name
        self.problem = problem
        self.norms = norms if norms is not None else ag.default_normalizers(problem)
        self.params = actor_params
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.eps = eps
        self.capture: list | None = None  # set to a list to record (obs, raw) per step
        flags = strategy_flags(name)
        self.el_mode = flags["el_mode"]
        self.track_fifo = flags["track_fifo"]
        self.specs = agent_specs(name, problem)
        family, _ = ag.SCHEDULER_SHAPE[name]
        self.codings = [ag.build_coding(problem, e, family) for e in range(problem.n_edges)]
        self._pending = None
        missing = [s.name for s in self.specs if s.name not in actor_params]
        if missing:
            raise ValueError(f"missing actor params for agents: {missing}")

    def reset(self):
        self._pending = None

    def _raw_action(self, agent: str, obs: np.ndarray, act_dim: int) -> np.ndarray:
        if self.eps > 0 and self.rng.random() < self.eps:
            return self.rng.uniform(size=act_dim)
        return np.asarray(self.params[agent].forward(obs))

    def route(self, arrivals, env: NetworkEnv) -> np.ndarray:
        obs = ag.encode_router_obs(arrivals, env, self.norms)
        raw = self._raw_action("router", obs, self.problem.n_paths)
        self._pending = {"obs": [obs], "raw": [raw]}
        return ag.decode_router_action(raw, arrivals, self.problem.pathset)

    def schedule(self, env: NetworkEnv):
        pr = self.problem
        flows, drops = zero_action(pr)
        learned_scheds = self.name != "marl_el_lelf"
        for e in range(pr.n_edges):
            coding = self.codings[e]
            cap = int(pr.capacities[e])
            if learned_scheds:
                obs = ag.encode_scheduler_obs(env, coding, self.norms)
                spec = self.specs[1 + e]
                raw = self._raw_action(spec.name, obs, spec.act_dim)
                self._pending["obs"].append(obs)
                self._pending["raw"].append(raw)
                if self.name == "marl_lt_dsk":
                    fwd, drop = ag.apply_scheduler_action_dsk(coding, raw, env, cap)
                elif self.name == "marl_lt_sk":
                    fwd, drop = ag.apply_scheduler_action_sk(coding, raw, env, cap)
                elif self.name == "marl_el_sk":
                    fwd, drop = ag.apply_scheduler_action_el_sk(coding, raw, env, cap)
                else:  # marl_el_smax
                    fwd, drop = ag.apply_scheduler_action_smax(coding, raw, env, cap, self.rng)
            else:
                counts = coding.counts(env)
                fwd = lelf_schedule(coding.entry_el, counts, cap)
                drop = None
            ag.scatter_entry_flows(pr, coding, fwd, drop, flows, drops)
        if self.capture is not None:
            self.capture.append(self._pending)
        self._pending = None
        return flows, drops, None


class MwrLelfStrategy:
    """Min-weight router + LELF schedulers; fully deterministic."""

    name = "mwr_el_lelf"
    el_mode = True
    track_fifo = False

    def __init__(self, problem: Problem):
        self.problem = problem
        self.codings = [ag.build_coding(problem, e, "el") for e in range(problem.n_edges)]

    def reset(self):
        pass

    def route(self, arrivals, env: NetworkEnv) -> np.ndarray:
        return mwr_route(arrivals, env)

    def schedule(self, env: NetworkEnv):
        pr = self.problem
        flows, drops = zero_action(pr)
        for e in range(pr.n_edges):
            coding = self.codings[e]
            fwd = lelf_schedule(coding.entry_el, coding.counts(env), int(pr.capacities[e]))
            ag.scatter_entry_flows(pr, coding, fwd, None, flows, drops)
        return flows, drops, None


class UmwFifoStrategy:
    """Virtual-queue min-cost router + per-interface FIFO service."""

    name = "umw_fifo"
    el_mode = False
    track_fifo = True

    def __init__(self, problem: Problem):
        self.problem = problem
        self.router = UmwRouter(problem)

    def reset(self):
        self.router.reset()

    def route(self, arrivals, env: NetworkEnv) -> np.ndarray:
        return self.router.route(arrivals, env)

    def schedule(self, env: NetworkEnv):
        pr = self.problem
        flows, drops = zero_action(pr)
        fifo_plan = {}
        for e in range(pr.n_edges):
            plan = fifo_schedule(env.fifo[e], int(pr.capacities[e]))
            if not plan:
                continue
            fifo_plan[e] = plan
            for kind, rec in plan:
                if kind != "fwd":
                    continue
                k = int(pr.path_edge_pos[rec.path, e])
                flows[rec.path, k, rec.lifetime] += 1
        return flows, drops, fifo_plan


def make_strategy(name: str, problem: Problem, actor_params: dict | None = None,
                  norms: ag.Normalizers | None = None,
                  rng: np.random.Generator | None = None, eps: float = 0.0):
    if name == "mwr_el_lelf":
        return MwrLelfStrategy(problem)
    if name == "umw_fifo":
        return UmwFifoStrategy(problem)
    if name in ag.MARL_STRATEGIES:
        if actor_params is None:
            raise ValueError(f"strategy {name!r} needs actor parameters (a checkpoint)")
        return MarlStrategy(name, problem, actor_params, norms=norms, rng=rng, eps=eps)
    raise ValueError(f"unknown strategy {name!r}")
