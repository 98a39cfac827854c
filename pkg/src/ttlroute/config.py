"""Experiment configuration: one structured YAML document, versioned schema.

Schema (version 1):

    schema_version: 1
    name: default7                  # label used for default output paths
    topology:
      nodes: [s1, s2, a, b, c, d1, d2]
      edges: [[s1, a, 10], ...]     # [tail, head, capacity]
    commodities:
      - {source: s1, destination: d1, lifetime: 5, rate: 6.0}
    strategy: mwr_el_lelf
    steps: 50
    eval_episodes: 500
    seeds: [1, 2, 3]
    grid: {lifetimes: [3, 5, 7], rates: [3, 6, 9, 12]}   # per-commodity rates
    normalizers: {queue: 10.0, arrival: 12.0}            # optional
    reward: {mode: deliveries, scale: 1.0}               # optional
    train: {episodes: 10000, ...}                        # optional TrainSchedule fields

Grid points override every commodity's lifetime/rate uniformly (the study
keeps commodities symmetric). A config is rejected when any commodity would
have no feasible path at the smallest configured lifetime.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agents import ALL_STRATEGIES, Normalizers, default_normalizers
from .env import Problem
from .network import Commodity, ConfigError, Topology
from .training import TrainSchedule

SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    name: str
    topology: Topology
    commodities: list[Commodity]
    strategy: str
    steps: int
    eval_episodes: int
    seeds: list[int]
    lifetimes_grid: list[int]
    rates_grid: list[float]
    train: TrainSchedule
    reward_mode: str
    reward_scale: float
    explicit_normalizers: Normalizers | None
    raw: dict = field(repr=False)

    @property
    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def problem(self, lifetime: int | None = None, rate: float | None = None) -> Problem:
        """Instance at a grid point; None keeps the base commodity values."""
        coms = [
            Commodity(c.source, c.destination,
                      int(lifetime) if lifetime is not None else c.lifetime,
                      float(rate) if rate is not None else c.rate)
            for c in self.commodities
        ]
        return Problem(self.topology, coms)

    def normalizers(self, problem: Problem) -> Normalizers:
        if self.explicit_normalizers is not None:
            return self.explicit_normalizers
        # shared across the grid so one trained policy sees a stable scale
        peak_rate = max([c.rate for c in self.commodities] + list(self.rates_grid) + [1.0])
        return Normalizers(
            queue=default_normalizers(problem).queue,
            arrival=float(peak_rate),
        )


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def parse_config(doc: dict, name_fallback: str = "experiment") -> ExperimentConfig:
    _require(isinstance(doc, dict), "config document must be a mapping")
    _require(doc.get("schema_version") == SCHEMA_VERSION,
             f"schema_version must be {SCHEMA_VERSION}")
    for key in ("topology", "commodities", "strategy"):
        _require(key in doc, f"config is missing {key!r}")

    topo_doc = doc["topology"]
    _require(isinstance(topo_doc.get("nodes"), list) and topo_doc["nodes"],
             "topology.nodes must be a non-empty list")
    _require(isinstance(topo_doc.get("edges"), list) and topo_doc["edges"],
             "topology.edges must be a non-empty list")
    edges = []
    for entry in topo_doc["edges"]:
        _require(isinstance(entry, list) and len(entry) == 3,
                 f"edge entries are [tail, head, capacity], got {entry!r}")
        edges.append((str(entry[0]), str(entry[1]), int(entry[2])))
    topology = Topology([str(n) for n in topo_doc["nodes"]], edges)

    commodities = []
    for cdoc in doc["commodities"]:
        commodities.append(Commodity(
            source=str(cdoc["source"]), destination=str(cdoc["destination"]),
            lifetime=int(cdoc["lifetime"]), rate=float(cdoc["rate"]),
        ))
    _require(commodities, "at least one commodity is required")

    strategy = str(doc["strategy"])
    _require(strategy in ALL_STRATEGIES,
             f"unknown strategy {strategy!r}; known: {', '.join(ALL_STRATEGIES)}")

    steps = int(doc.get("steps", 50))
    eval_episodes = int(doc.get("eval_episodes", 500))
    _require(steps > 0 and eval_episodes > 0, "steps and eval_episodes must be positive")

    seeds = [int(s) for s in doc.get("seeds", [1])]
    _require(seeds, "seed list must be non-empty")

    grid = doc.get("grid", {})
    lifetimes_grid = [int(x) for x in grid.get("lifetimes", [c.lifetime for c in commodities[:1]])]
    rates_grid = [float(x) for x in grid.get("rates", [commodities[0].rate])]
    _require(lifetimes_grid and rates_grid, "grid lists must be non-empty")

    norm_doc = doc.get("normalizers")
    explicit_norms = None
    if norm_doc is not None:
        explicit_norms = Normalizers(queue=float(norm_doc["queue"]),
                                     arrival=float(norm_doc["arrival"]))

    reward_doc = doc.get("reward", {})
    reward_mode = str(reward_doc.get("mode", "deliveries"))
    _require(reward_mode in ("deliveries", "deliveries_minus_drops"),
             f"unknown reward mode {reward_mode!r}")
    reward_scale = float(reward_doc.get("scale", 1.0))

    train = TrainSchedule(**doc.get("train", {}))

    cfg = ExperimentConfig(
        name=str(doc.get("name", name_fallback)),
        topology=topology,
        commodities=commodities,
        strategy=strategy,
        steps=steps,
        eval_episodes=eval_episodes,
        seeds=seeds,
        lifetimes_grid=lifetimes_grid,
        rates_grid=rates_grid,
        train=train,
        reward_mode=reward_mode,
        reward_scale=reward_scale,
        explicit_normalizers=explicit_norms,
        raw=doc,
    )

    # every commodity must stay serviceable at the tightest configured lifetime
    min_life = min(lifetimes_grid + [c.lifetime for c in commodities])
    cfg.problem(lifetime=min_life)  # raises ConfigError when unserviceable
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return parse_config(doc, name_fallback=path.stem)
