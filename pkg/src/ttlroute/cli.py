"""Command line front end.

Subcommands: train, evaluate, compare, paths (dump feasible paths plus the
size-accounting report), audit (replay a StepLog archive through the
invariant suite).

Exit codes: 0 success, 2 unknown strategy / bad usage, 3 malformed config,
4 missing file, 5 audit found violations, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .agents import ALL_STRATEGIES, MARL_STRATEGIES, accounting_report
from .config import load_config
from .harness import audit_archive, compare, evaluate
from .network import ConfigError
from .training import MaddpgTrainer, load_actor_params

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_VIOLATIONS = 5


def out_root() -> Path:
    return Path(os.environ.get("TTLROUTE_OUT_ROOT", "runs"))


def _check_strategy(name: str):
    if name not in ALL_STRATEGIES:
        raise UnknownStrategy(f"unknown strategy {name!r}; known: {', '.join(ALL_STRATEGIES)}")


class UnknownStrategy(Exception):
    pass


def cmd_paths(args) -> int:
    cfg = load_config(args.config)
    problem = cfg.problem()
    print(f"# {cfg.name}: feasible paths")
    for c, com in enumerate(problem.commodities):
        idxs = problem.pathset.by_commodity[c]
        print(f"commodity {c}: {com.source} -> {com.destination} "
              f"(lifetime {com.lifetime}, rate {com.rate})")
        for g in idxs:
            print(f"  [{g}] {' -> '.join(problem.pathset.paths[g])}")
    strategy = args.strategy or cfg.strategy
    _check_strategy(strategy)
    if strategy == "umw_fifo":
        print("\n(no size-accounting table for umw_fifo)")
        return EXIT_OK
    report = accounting_report(strategy, problem)
    print(f"\n# accounting for {strategy}")
    r = report["router"]
    print(f"router: obs {r['observation']}  act {r['action']}  mlp {r['mlp']}  apply {r['apply']}")
    for row in report["schedulers"]:
        print(f"sched {row['edge'][0]}->{row['edge'][1]}: obs {row['observation']}  "
              f"act {row['action']}  mlp {row['mlp']}  apply {row['apply']}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    strategy = args.strategy or cfg.strategy
    _check_strategy(strategy)
    actor_params = None
    if strategy in MARL_STRATEGIES:
        if not args.checkpoint:
            raise ConfigError(f"strategy {strategy!r} requires --checkpoint")
        actor_params, _ = load_actor_params(args.checkpoint)
    out = Path(args.out) if args.out else out_root() / f"{cfg.name}_evaluate"
    archive_dir = out / "archive" if args.archive else None
    result = evaluate(
        cfg, strategy, args.seed,
        lifetime=args.lifetime, rate=args.rate,
        episodes=args.episodes, actor_params=actor_params,
        archive_dir=archive_dir,
    )
    print(f"strategy {strategy}  lifetime {result.lifetime}  "
          f"aggregate_rate {result.aggregate_rate}  seed {result.seed}")
    print(f"episodes {len(result.episodes)}  "
          f"mean_episode_reliability {result.mean_episode_reliability!r}  "
          f"aggregate_reliability {result.aggregate_reliability!r}")
    if archive_dir is not None:
        print(f"archive written to {archive_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    strategies = [s.strip() for s in args.strategies.split(",")] if args.strategies \
        else [cfg.strategy]
    for s in strategies:
        _check_strategy(s)
    checkpoints = {}
    for s in strategies:
        if s in MARL_STRATEGIES:
            if not args.checkpoint_root:
                raise ConfigError(f"strategy {s!r} requires --checkpoint-root")
            checkpoints[s], _ = load_actor_params(Path(args.checkpoint_root) / s)
    out = Path(args.out) if args.out else out_root() / f"{cfg.name}_compare"
    compare(cfg, strategies, out, episodes=args.episodes,
            checkpoints=checkpoints, write_samples=not args.no_samples)
    print(f"comparison written to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    strategy = args.strategy or cfg.strategy
    _check_strategy(strategy)
    if strategy not in MARL_STRATEGIES:
        raise ConfigError(f"strategy {strategy!r} is rule-based; nothing to train")
    problem = cfg.problem()
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    trainer = MaddpgTrainer(
        problem, strategy, cfg.train, seed=seed,
        norms=cfg.normalizers(problem),
        reward_mode=cfg.reward_mode, reward_scale=cfg.reward_scale,
        config_hash=cfg.hash,
    )
    if args.resume:
        trainer.load_checkpoint(args.resume)
        print(f"resumed from {args.resume} at episode {trainer.total_episodes}")
    out = Path(args.out) if args.out else out_root() / f"{cfg.name}_train_{strategy}_s{seed}"
    rows = trainer.run(out_dir=out, progress_every=args.progress)
    print(f"trained {len(rows)} episodes; checkpoints and trace under {out}")
    return EXIT_OK


def cmd_audit(args) -> int:
    report = audit_archive(args.archive)
    print(f"episodes audited: {report['episodes']}")
    if report["violations"]:
        for v in report["violations"]:
            print(f"VIOLATION {v}")
        return EXIT_VIOLATIONS
    print("zero violations; archived metrics recompute bit-exactly")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttlroute",
        description="deadline-constrained routing/scheduling lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("paths", help="dump feasible paths and size accounting")
    p.add_argument("--config", required=True)
    p.add_argument("--strategy", default=None)
    p.set_defaults(fn=cmd_paths)

    p = sub.add_parser("evaluate", help="evaluate one strategy at one grid point")
    p.add_argument("--config", required=True)
    p.add_argument("--strategy", default=None)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lifetime", type=int, default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--archive", action="store_true")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("compare", help="full grid comparison across strategies")
    p.add_argument("--config", required=True)
    p.add_argument("--strategies", default=None, help="comma-separated names")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--checkpoint-root", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--no-samples", action="store_true")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("train", help="train a MARL strategy")
    p.add_argument("--config", required=True)
    p.add_argument("--strategy", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--resume", default=None)
    p.add_argument("--progress", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("audit", help="replay an archive through the invariant suite")
    p.add_argument("--archive", required=True)
    p.set_defaults(fn=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UnknownStrategy as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
