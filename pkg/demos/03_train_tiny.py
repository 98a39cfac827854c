"""Desk-scale actor-critic training on the tiny relay-bottleneck instance.

Uniform-random routing on configs/tiny3.yaml wastes roughly 40% of packets in
the capacity-1 relay; a trained router learns to keep traffic on the direct
link. 300 episodes (~10 s) is already enough to see the gap open. The full
smoke protocol lives in tests/test_acceptance.py (criteria 8 and 9).
"""

from pathlib import Path

import numpy as np

from ttlroute.config import load_config
from ttlroute.env import NetworkEnv
from ttlroute.harness import run_episode, stream_seed
from ttlroute.strategies import init_actor_params, make_strategy, strategy_flags
from ttlroute.training import MaddpgTrainer

cfg = load_config(Path(__file__).parent.parent / "configs" / "tiny3.yaml")
cfg.train.episodes = 300  # demo budget; the shipped config trains 1200
problem = cfg.problem()


def evaluate(params, eps=0.0, episodes=100, seed=11):
    flags = strategy_flags("marl_el_lelf")
    env = NetworkEnv(problem, rng=np.random.default_rng(stream_seed(seed, "demo-env")), **flags)
    strat = make_strategy("marl_el_lelf", problem, actor_params=params,
                          norms=cfg.normalizers(problem),
                          rng=np.random.default_rng(stream_seed(seed, "demo-pol")), eps=eps)
    return float(np.mean([run_episode(env, strat, cfg.steps)[0].reliability
                          for _ in range(episodes)]))


random_params = init_actor_params("marl_el_lelf", problem, np.random.default_rng(0))
baseline = evaluate(random_params, eps=1.0)
print(f"random-routing baseline reliability: {baseline:.3f}")

trainer = MaddpgTrainer(problem, "marl_el_lelf", cfg.train, seed=11,
                        norms=cfg.normalizers(problem),
                        reward_mode=cfg.reward_mode, reward_scale=cfg.reward_scale)
rows = trainer.run()
for start in range(0, len(rows), 60):
    chunk = rows[start:start + 60]
    mean_r = np.mean([r["reward_sum"] for r in chunk])
    print(f"episodes {start:4d}-{start + len(chunk) - 1}: "
          f"eps={chunk[-1]['eps']:.2f}  mean episode reward {mean_r:.1f}")

trained = evaluate(trainer.actor_params())
print(f"\ntrained reliability: {trained:.3f}  (baseline {baseline:.3f}, "
      f"improvement {trained - baseline:+.3f})")
