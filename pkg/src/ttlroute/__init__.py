"""Deadline-constrained packet routing/scheduling lab.

Library layout:
  network     topology, commodities, feasible paths, effective lifetime
  env         path-indexed lifetime queues and one-slot dynamics
  rules       LELF / min-weight router / virtual-queue router / FIFO
  nets        minimal MLP + Adam + target networks
  agents      observation/action codings and size accounting
  strategies  the seven named control strategies
  training    replay buffer and multi-agent actor-critic trainer
  harness     experiment configs, evaluation grid, metrics, audit
"""

from .network import Commodity, ConfigError, Topology, effective_lifetime, enumerate_feasible_paths
from .env import NetworkEnv, Problem, StepLog, StepViolation

__all__ = [
    "Commodity",
    "ConfigError",
    "Topology",
    "effective_lifetime",
    "enumerate_feasible_paths",
    "NetworkEnv",
    "Problem",
    "StepLog",
    "StepViolation",
]

__version__ = "0.1.0"
