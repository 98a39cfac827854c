"""Experiment orchestration: evaluation runs, the comparison grid, metrics
files, StepLog archives, and the archive auditor.

File contracts (all deterministic given config + seeds, single worker):
  metrics.csv   strategy,lifetime,aggregate_rate,seed,episode,reliability
  samples.csv   strategy,lifetime,aggregate_rate,seed,episode,step,deliveries
  summary.csv   strategy,lifetime,aggregate_rate,episodes,
                mean_episode_reliability,aggregate_reliability,degenerate_episodes
  archive dir   manifest.json + steplogs.jsonl (one JSON record per slot)

Reliability of an episode is timely deliveries / arrivals, with the 0/0 case
defined as 1.0 and flagged degenerate. Aggregate reliability over episodes is
total deliveries / total arrivals (not the mean of ratios); both appear in
summary.csv.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import MARL_STRATEGIES
from .audit import replay_episode, steplog_record
from .config import ExperimentConfig
from .env import NetworkEnv, Problem
from .network import ConfigError
from .strategies import make_strategy, strategy_flags

ARCHIVE_SCHEMA = 1
METRICS_HEADER = "strategy,lifetime,aggregate_rate,seed,episode,reliability"
SAMPLES_HEADER = "strategy,lifetime,aggregate_rate,seed,episode,step,deliveries"
SUMMARY_HEADER = ("strategy,lifetime,aggregate_rate,episodes,"
                  "mean_episode_reliability,std_episode_reliability,"
                  "aggregate_reliability,degenerate_episodes")


def stream_seed(*parts) -> np.random.SeedSequence:
    """Stable entropy from mixed seed parts (ints, floats, names)."""
    ints = []
    for p in parts:
        if isinstance(p, str):
            ints.append(int.from_bytes(hashlib.sha256(p.encode()).digest()[:4], "little"))
        elif isinstance(p, float):
            ints.append(int(round(p * 1000)) & 0xFFFFFFFF)
        else:
            ints.append(int(p) & 0xFFFFFFFF)
    return np.random.SeedSequence(ints)


@dataclass
class EpisodeMetrics:
    arrivals: int
    delivered: int
    proactive_drops: int
    expired: int
    el_expired: int
    leftover: int
    per_step_deliveries: list[int] = field(repr=False)
    per_step_arrivals: list[int] = field(repr=False)

    @property
    def degenerate(self) -> bool:
        return self.arrivals == 0

    @property
    def reliability(self) -> float:
        if self.arrivals == 0:
            return 1.0
        return self.delivered / self.arrivals


@dataclass
class EvalResult:
    strategy: str
    lifetime: int
    rate: float
    aggregate_rate: float
    seed: int
    episodes: list[EpisodeMetrics]

    @property
    def mean_episode_reliability(self) -> float:
        return float(np.mean([m.reliability for m in self.episodes]))

    @property
    def aggregate_reliability(self) -> float:
        arrived = sum(m.arrivals for m in self.episodes)
        delivered = sum(m.delivered for m in self.episodes)
        return 1.0 if arrived == 0 else delivered / arrived


def run_episode(env: NetworkEnv, strategy, steps: int, keep_logs: bool = False):
    env.reset()
    strategy.reset()
    logs = []
    per_step = []
    per_step_arr = []
    arrivals = delivered = proactive = expired = el_expired = 0
    for _ in range(steps):
        log = env.step(strategy)
        arrivals += int(log.arrivals.sum())
        delivered += log.delivered_total
        proactive += int(log.drops.sum())
        expired += int(log.expired.sum())
        el_expired += int(log.el_expired.sum())
        per_step.append(log.delivered_total)
        per_step_arr.append(int(log.arrivals.sum()))
        if keep_logs:
            logs.append(log)
    metrics = EpisodeMetrics(
        arrivals=arrivals, delivered=delivered, proactive_drops=proactive,
        expired=expired, el_expired=el_expired, leftover=env.total_queued(),
        per_step_deliveries=per_step, per_step_arrivals=per_step_arr,
    )
    return metrics, logs


def build_strategy_for_run(cfg: ExperimentConfig, strategy_name: str, problem: Problem,
                           seed_parts, actor_params=None, eps: float = 0.0):
    if strategy_name in MARL_STRATEGIES and actor_params is None:
        raise ConfigError(
            f"strategy {strategy_name!r} needs a trained checkpoint for evaluation"
        )
    rng = np.random.default_rng(stream_seed(*seed_parts, "policy"))
    return make_strategy(strategy_name, problem, actor_params=actor_params,
                         norms=cfg.normalizers(problem), rng=rng, eps=eps)


def evaluate(cfg: ExperimentConfig, strategy_name: str, seed: int, *,
             lifetime: int | None = None, rate: float | None = None,
             episodes: int | None = None, steps: int | None = None,
             actor_params=None, archive_dir=None) -> EvalResult:
    """Deterministic evaluation at one grid point (exploration off)."""
    lifetime = lifetime if lifetime is not None else cfg.commodities[0].lifetime
    rate = float(rate if rate is not None else cfg.commodities[0].rate)
    episodes = episodes if episodes is not None else cfg.eval_episodes
    steps = steps if steps is not None else cfg.steps

    problem = cfg.problem(lifetime=lifetime, rate=rate)
    flags = strategy_flags(strategy_name)
    # grid points share the stream per (seed, strategy): common random numbers
    # pair the lifetime/rate comparisons, as the qualitative-pattern check needs
    seed_parts = (seed, strategy_name)
    env = NetworkEnv(problem, rng=np.random.default_rng(stream_seed(*seed_parts, "env")),
                     **flags)
    strategy = build_strategy_for_run(cfg, strategy_name, problem, seed_parts,
                                      actor_params=actor_params)

    keep_logs = archive_dir is not None
    all_metrics = []
    episode_records = []
    for _ in range(episodes):
        metrics, logs = run_episode(env, strategy, steps, keep_logs=keep_logs)
        all_metrics.append(metrics)
        if keep_logs:
            episode_records.append([steplog_record(log) for log in logs])

    result = EvalResult(strategy=strategy_name, lifetime=lifetime, rate=rate,
                        aggregate_rate=float(problem.rates.sum()), seed=seed,
                        episodes=all_metrics)
    if keep_logs:
        write_archive(archive_dir, cfg, result, flags["el_mode"], episode_records, steps)
    return result


# -- archives ------------------------------------------------------------------

def write_archive(directory, cfg: ExperimentConfig, result: EvalResult,
                  el_mode: bool, episode_records, steps: int):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem(lifetime=result.lifetime, rate=result.rate)
    manifest = {
        "schema_version": ARCHIVE_SCHEMA,
        "config_hash": cfg.hash,
        "strategy": result.strategy,
        "el_mode": el_mode,
        "seed": result.seed,
        "lifetime": result.lifetime,
        "rate": result.rate,
        "episodes": len(episode_records),
        "steps": steps,
        "topology": {
            "nodes": list(problem.topology.nodes),
            "edges": [[i, j, int(problem.topology.capacity[(i, j)])]
                      for i, j in problem.topology.edges],
        },
        "commodities": [
            {"source": c.source, "destination": c.destination,
             "lifetime": c.lifetime, "rate": c.rate}
            for c in problem.commodities
        ],
        "reliability": [repr(m.reliability) for m in result.episodes],
    }
    with open(directory / "manifest.json", "w", newline="") as f:
        json.dump(manifest, f, sort_keys=True, indent=1)
        f.write("\n")
    with open(directory / "steplogs.jsonl", "w", newline="") as f:
        for ep, records in enumerate(episode_records):
            for rec in records:
                row = {"episode": ep, **rec}
                f.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")


def audit_archive(directory) -> dict:
    """Replay an archive through the invariant suite and recompute metrics.

    Returns {"violations": [...], "episodes": n, "reliability_matches": bool};
    recomputed per-episode reliability must equal the archived values
    bit-exactly.
    """
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json under {directory}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    if manifest.get("schema_version") != ARCHIVE_SCHEMA:
        raise ConfigError("unsupported archive schema")

    from .network import Commodity, Topology
    topo = Topology(manifest["topology"]["nodes"],
                    [(i, j, c) for i, j, c in manifest["topology"]["edges"]])
    commodities = [Commodity(c["source"], c["destination"], c["lifetime"], c["rate"])
                   for c in manifest["commodities"]]
    problem = Problem(topo, commodities)

    by_episode: dict[int, list] = {}
    with open(directory / "steplogs.jsonl") as f:
        for line in f:
            rec = json.loads(line)
            by_episode.setdefault(rec["episode"], []).append(rec)

    violations = []
    recomputed = []
    for ep in sorted(by_episode):
        records = sorted(by_episode[ep], key=lambda r: r["t"])
        report = replay_episode(problem, manifest["el_mode"], records)
        violations.extend(f"episode {ep}: {v}" for v in report["violations"])
        rel = 1.0 if report["arrived"] == 0 else report["delivered"] / report["arrived"]
        recomputed.append(repr(rel))

    matches = recomputed == manifest["reliability"]
    if not matches:
        violations.append("recomputed reliability differs from archived values")
    return {
        "violations": violations,
        "episodes": len(by_episode),
        "reliability_matches": matches,
    }


# -- comparison grid ----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def compare(cfg: ExperimentConfig, strategies, out_dir, *,
            episodes: int | None = None, steps: int | None = None,
            checkpoints: dict | None = None, write_samples: bool = True) -> Path:
    """Evaluate every strategy over the full (lifetime, rate, seed) grid.

    ``checkpoints`` maps strategy name -> actor params for MARL strategies.
    Emits metrics.csv, summary.csv and (optionally) samples.csv under
    ``out_dir``; rows are in deterministic grid order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoints = checkpoints or {}

    metrics_rows = []
    samples_rows = []
    summary_rows = []
    for strategy in strategies:
        for lifetime in cfg.lifetimes_grid:
            for rate in cfg.rates_grid:
                per_point = []
                for seed in cfg.seeds:
                    result = evaluate(
                        cfg, strategy, seed, lifetime=lifetime, rate=rate,
                        episodes=episodes, steps=steps,
                        actor_params=checkpoints.get(strategy),
                    )
                    per_point.append(result)
                    for ep, m in enumerate(result.episodes):
                        metrics_rows.append(
                            f"{strategy},{lifetime},{_fmt(result.aggregate_rate)},"
                            f"{seed},{ep},{_fmt(m.reliability)}"
                        )
                        if write_samples:
                            for step, d in enumerate(m.per_step_deliveries):
                                samples_rows.append(
                                    f"{strategy},{lifetime},{_fmt(result.aggregate_rate)},"
                                    f"{seed},{ep},{step},{d}"
                                )
                rels = [m.reliability for r in per_point for m in r.episodes]
                n_eps = len(rels)
                mean_rel = float(np.mean(rels))
                std_rel = float(np.std(rels))
                arrived = sum(m.arrivals for r in per_point for m in r.episodes)
                delivered = sum(m.delivered for r in per_point for m in r.episodes)
                agg_rel = 1.0 if arrived == 0 else delivered / arrived
                degen = sum(m.degenerate for r in per_point for m in r.episodes)
                summary_rows.append(
                    f"{strategy},{lifetime},{_fmt(per_point[0].aggregate_rate)},{n_eps},"
                    f"{_fmt(mean_rel)},{_fmt(std_rel)},{_fmt(agg_rel)},{degen}"
                )

    _write_csv(out_dir / "metrics.csv", METRICS_HEADER, metrics_rows)
    _write_csv(out_dir / "summary.csv", SUMMARY_HEADER, summary_rows)
    if write_samples:
        _write_csv(out_dir / "samples.csv", SAMPLES_HEADER, samples_rows)
    return out_dir


def _write_csv(path: Path, header: str, rows):
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")
