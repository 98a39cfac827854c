"""Centralized-training / decentralized-execution multi-agent actor-critic.

Each learned agent owns an actor over its local observation and a critic over
the joint observation + joint action; critics' bootstrap targets come
exclusively from target networks. Training runs a long main phase followed by
a shorter improvement phase with optimizer state and exploration reset.

Determinism: all randomness flows from one seed through named child streams
(weight init, environment, policy exploration/sampling schedulers, minibatch
sampling), and checkpoints persist every stream's state, so a resumed run
reproduces the original trace bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .agents import Normalizers, default_normalizers
from .env import NetworkEnv, Problem
from .nets import HIDDEN_SIZES, LOSSES, AdamState, Mlp, adam_step, update_target
from .network import ConfigError
from .strategies import MarlStrategy, agent_specs, strategy_flags

CHECKPOINT_SCHEMA = 1


@dataclass
class TrainSchedule:
    """Knobs of the two-phase schedule; defaults follow the study setup."""

    episodes: int = 10_000
    improvement_episodes: int = 4_000
    steps: int = 50
    lr: float = 0.001
    batch_episodes: int = 500          # buffer fill (in episodes) before updates start
    minibatch: int = 25_000            # transitions per update (500 episodes x 50 steps)
    eps_init: float = 1.0
    eps_decay: float = 0.95
    eps_floor: float = 0.0
    gamma: float = 0.99
    tau: float = 0.01
    target_mode: str = "soft"
    loss: str = "rmse"
    replay_episodes: int = 5_000
    update_rounds: int = 1             # critic+actor updates per agent per episode
    eval_episodes: int = 500
    checkpoint_every: int = 0          # 0: only final / phase boundaries

    def __post_init__(self):
        if self.episodes < 0 or self.improvement_episodes < 0:
            raise ConfigError("episode counts must be >= 0")
        for name in ("steps", "batch_episodes", "minibatch", "replay_episodes", "update_rounds"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not (0.0 <= self.eps_init <= 1.0 and 0.0 <= self.eps_floor <= 1.0):
            raise ConfigError("epsilon must stay within [0, 1]")
        if not (0.0 < self.eps_decay <= 1.0):
            raise ConfigError("eps_decay must be in (0, 1]")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.target_mode not in ("soft", "hard"):
            raise ConfigError(f"unknown target mode {self.target_mode!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class ReplayBuffer:
    """Ring buffer over transitions with FIFO eviction and uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def add_batch(self, obs, act, rew, next_obs, done):
        for row in range(len(rew)):
            self.obs[self.ptr] = obs[row]
            self.act[self.ptr] = act[row]
            self.rew[self.ptr] = rew[row]
            self.next_obs[self.ptr] = next_obs[row]
            self.done[self.ptr] = done[row]
            self.ptr = (self.ptr + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, n: int):
        idx = rng.integers(0, self.size, size=n)
        return (self.obs[idx], self.act[idx], self.rew[idx],
                self.next_obs[idx], self.done[idx])


@dataclass
class Agent:
    name: str
    obs_dim: int
    act_dim: int
    actor: Mlp
    critic: Mlp
    actor_target: Mlp
    critic_target: Mlp
    actor_opt: AdamState
    critic_opt: AdamState


@dataclass
class Transition:
    """One joint step; mainly a documentation/type anchor, storage is array-based."""

    obs: np.ndarray
    act: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


def _rng_state(gen: np.random.Generator) -> dict:
    return gen.bit_generator.state


def _restore_rng(state: dict) -> np.random.Generator:
    gen = np.random.default_rng(0)
    gen.bit_generator.state = state
    return gen


class MaddpgTrainer:
    def __init__(self, problem: Problem, strategy_name: str, schedule: TrainSchedule,
                 seed: int, norms: Normalizers | None = None,
                 reward_mode: str = "deliveries", reward_scale: float = 1.0,
                 config_hash: str = ""):
        specs = agent_specs(strategy_name, problem)
        if not specs:
            raise ConfigError(f"strategy {strategy_name!r} has no learned agents to train")
        if reward_mode not in ("deliveries", "deliveries_minus_drops"):
            raise ConfigError(f"unknown reward mode {reward_mode!r}")
        self.problem = problem
        self.strategy_name = strategy_name
        self.schedule = schedule
        self.seed = seed
        self.norms = norms if norms is not None else default_normalizers(problem)
        self.reward_mode = reward_mode
        self.reward_scale = reward_scale
        self.config_hash = config_hash

        root = np.random.SeedSequence(seed)
        init_ss, env_ss, policy_ss, sample_ss = root.spawn(4)
        init_rng = np.random.default_rng(init_ss)
        self.rng_sample = np.random.default_rng(sample_ss)

        self.specs = specs
        self.obs_dims = [s.obs_dim for s in specs]
        self.act_dims = [s.act_dim for s in specs]
        self.obs_off = np.concatenate([[0], np.cumsum(self.obs_dims)])
        self.act_off = np.concatenate([[0], np.cumsum(self.act_dims)])
        self.joint_obs_dim = int(self.obs_off[-1])
        self.joint_act_dim = int(self.act_off[-1])

        self.agents: list[Agent] = []
        critic_in = self.joint_obs_dim + self.joint_act_dim
        for spec in specs:
            actor = Mlp.init(spec.obs_dim, spec.act_dim, init_rng, HIDDEN_SIZES, "logistic")
            critic = Mlp.init(critic_in, 1, init_rng, HIDDEN_SIZES, "identity")
            agent = Agent(
                name=spec.name, obs_dim=spec.obs_dim, act_dim=spec.act_dim,
                actor=actor, critic=critic,
                actor_target=actor.copy(), critic_target=critic.copy(),
                actor_opt=AdamState(actor.params, lr=schedule.lr),
                critic_opt=AdamState(critic.params, lr=schedule.lr),
            )
            self.agents.append(agent)

        flags = strategy_flags(strategy_name)
        self.env = NetworkEnv(problem, rng=np.random.default_rng(env_ss), **flags)
        self.strategy = MarlStrategy(
            strategy_name, problem,
            {a.name: a.actor for a in self.agents},  # live views: updates apply immediately
            norms=self.norms, rng=np.random.default_rng(policy_ss),
        )
        self.buffer = ReplayBuffer(schedule.replay_episodes * schedule.steps,
                                   self.joint_obs_dim, self.joint_act_dim)
        self.episodes_buffered = 0
        self.phase = 0            # 0 = training, 1 = improvement
        self.ep_in_phase = 0
        self.loss_fn = LOSSES[schedule.loss]

    # -- schedule ------------------------------------------------------------

    @property
    def phases(self):
        return (("train", self.schedule.episodes),
                ("improve", self.schedule.improvement_episodes))

    def epsilon(self) -> float:
        s = self.schedule
        return max(s.eps_floor, s.eps_init * s.eps_decay ** self.ep_in_phase)

    def step_reward(self, log) -> float:
        r = log.delivered_total
        if self.reward_mode == "deliveries_minus_drops":
            r -= log.dropped_total
        return r * self.reward_scale

    # -- rollout ---------------------------------------------------------------

    def rollout_episode(self, eps: float, collect: bool = True) -> float:
        """One 50-step episode under eps-greedy; transitions go to the buffer."""
        steps = self.schedule.steps
        self.env.reset()
        self.strategy.reset()
        self.strategy.eps = eps
        self.strategy.capture = [] if collect else None
        rewards = np.zeros(steps)
        for t in range(steps):
            log = self.env.step(self.strategy)
            rewards[t] = self.step_reward(log)
        if collect:
            cap = self.strategy.capture
            obs = np.stack([np.concatenate(c["obs"]) for c in cap])
            act = np.stack([np.concatenate(c["raw"]) for c in cap])
            next_obs = np.zeros_like(obs)
            next_obs[:-1] = obs[1:]
            done = np.zeros(steps)
            done[-1] = 1.0
            self.buffer.add_batch(obs, act, rewards, next_obs, done)
            self.episodes_buffered += 1
        self.strategy.capture = None
        return float(rewards.sum())

    # -- updates -----------------------------------------------------------------

    def _joint_target_actions(self, next_obs: np.ndarray) -> np.ndarray:
        parts = []
        for j, agent in enumerate(self.agents):
            sl = slice(self.obs_off[j], self.obs_off[j + 1])
            parts.append(agent.actor_target.forward(next_obs[:, sl]))
        return np.concatenate(parts, axis=1)

    def critic_update(self, i: int, batch) -> float:
        obs, act, rew, next_obs, done = batch
        agent = self.agents[i]
        a_next = self._joint_target_actions(next_obs)
        q_next = agent.critic_target.forward(np.concatenate([next_obs, a_next], axis=1))[:, 0]
        y = rew + self.schedule.gamma * (1.0 - done) * q_next
        pred, cache = agent.critic.forward_cache(np.concatenate([obs, act], axis=1))
        loss, dpred = self.loss_fn(pred[:, 0], y)
        if not np.isfinite(loss):
            raise FloatingPointError(
                f"non-finite critic loss for agent {agent.name!r} "
                f"(pred range {np.nanmin(pred)}..{np.nanmax(pred)})"
            )
        grads, _ = agent.critic.backward(cache, dpred[:, None])
        adam_step(agent.critic.params, grads, agent.critic_opt)
        return loss

    def actor_gradient(self, i: int, batch):
        """Ascent gradient of mean Q for agent i's actor; gradient flows only
        through the critic's action-input slot of agent i."""
        obs, act, _, _, _ = batch
        agent = self.agents[i]
        obs_i = obs[:, self.obs_off[i]:self.obs_off[i + 1]]
        a_i, cache_a = agent.actor.forward_cache(obs_i)
        act_joined = act.copy()
        a_lo = self.joint_obs_dim + self.act_off[i]
        act_joined[:, self.act_off[i]:self.act_off[i + 1]] = a_i
        x = np.concatenate([obs, act_joined], axis=1)
        q, cache_c = agent.critic.forward_cache(x)
        objective = float(q.mean())
        dq = np.full_like(q, 1.0 / len(q))
        _, dx = agent.critic.backward(cache_c, dq)
        da_i = dx[:, a_lo:a_lo + agent.act_dim]
        grads, _ = agent.actor.backward(cache_a, da_i)
        return grads, objective

    def actor_update(self, i: int, batch) -> float:
        agent = self.agents[i]
        grads, objective = self.actor_gradient(i, batch)
        for g in grads.values():
            if not np.isfinite(g).all():
                raise FloatingPointError(f"non-finite actor gradient for agent {agent.name!r}")
        ascent = {k: -g for k, g in grads.items()}  # Adam minimizes
        adam_step(agent.actor.params, ascent, agent.actor_opt)
        return objective

    def update_all(self) -> dict:
        """One round of critic+actor updates per agent, then target refresh."""
        s = self.schedule
        out = {}
        for _ in range(s.update_rounds):
            for i, agent in enumerate(self.agents):
                batch = self.buffer.sample(self.rng_sample, s.minibatch)
                out[f"critic_loss_{agent.name}"] = self.critic_update(i, batch)
                out[f"actor_obj_{agent.name}"] = self.actor_update(i, batch)
            for agent in self.agents:
                update_target(agent.actor_target, agent.actor, s.target_mode, s.tau)
                update_target(agent.critic_target, agent.critic, s.target_mode, s.tau)
        return out

    # -- phases --------------------------------------------------------------------

    def reset_phase_state(self):
        """Improvement-phase boundary: optimizer state and exploration restart."""
        for agent in self.agents:
            agent.actor_opt.reset()
            agent.critic_opt.reset()
        self.ep_in_phase = 0

    def train_one_episode(self) -> dict:
        eps = self.epsilon()
        reward = self.rollout_episode(eps)
        row = {
            "episode": self.total_episodes,
            "phase": self.phases[self.phase][0],
            "eps": eps,
            "reward_sum": reward,
            "reward_mean": reward / self.schedule.steps,
        }
        if self.episodes_buffered >= self.schedule.batch_episodes:
            row.update(self.update_all())
        self.ep_in_phase += 1
        return row

    @property
    def total_episodes(self) -> int:
        done_before = sum(n for _, n in self.phases[: self.phase])
        return done_before + self.ep_in_phase

    def run(self, out_dir=None, trace_name: str = "trace.csv",
            progress_every: int = 0) -> list[dict]:
        """Run the remaining schedule; returns (and optionally writes) the trace."""
        rows = []
        writer = _TraceWriter(Path(out_dir) / trace_name, self) if out_dir else None
        while self.phase < len(self.phases):
            phase_name, phase_total = self.phases[self.phase]
            while self.ep_in_phase < phase_total:
                row = self.train_one_episode()
                rows.append(row)
                if writer:
                    writer.write(row)
                if progress_every and row["episode"] % progress_every == 0:
                    print(f"[{phase_name}] episode {row['episode']} "
                          f"eps={row['eps']:.3f} reward={row['reward_sum']:.1f}")
                every = self.schedule.checkpoint_every
                if out_dir and every and (self.ep_in_phase % every == 0):
                    self.save_checkpoint(Path(out_dir) / f"ckpt_ep{self.total_episodes}")
            self.phase += 1
            if self.phase == 1 and self.phases[1][1] > 0:
                self.reset_phase_state()
                if out_dir:
                    self.save_checkpoint(Path(out_dir) / "ckpt_phase_boundary")
            else:
                self.ep_in_phase = 0
        if writer:
            writer.close()
        if out_dir:
            self.save_checkpoint(Path(out_dir) / "final")
        return rows

    # -- persistence ------------------------------------------------------------------

    def actor_params(self) -> dict:
        return {a.name: a.actor for a in self.agents}

    def save_checkpoint(self, directory, include_buffer: bool = True):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = []
        for agent in self.agents:
            arrays = {}
            for tag, net in (("actor", agent.actor), ("critic", agent.critic),
                             ("actor_target", agent.actor_target),
                             ("critic_target", agent.critic_target)):
                for k, v in net.params.items():
                    arrays[f"{tag}.{k}"] = v
            for tag, opt in (("actor_opt", agent.actor_opt), ("critic_opt", agent.critic_opt)):
                for k in opt.m:
                    arrays[f"{tag}.m.{k}"] = opt.m[k]
                    arrays[f"{tag}.v.{k}"] = opt.v[k]
            meta = {
                "agent": agent.name,
                "obs_dim": agent.obs_dim,
                "act_dim": agent.act_dim,
                "actor_opt_step": agent.actor_opt.step,
                "critic_opt_step": agent.critic_opt.step,
            }
            fname = f"agent_{agent.name}.bin"
            ckpt.save_container(directory / fname, meta, arrays)
            files.append(fname)

        state_arrays = {}
        if include_buffer:
            state_arrays = {
                "buffer.obs": self.buffer.obs[: self.buffer.size],
                "buffer.act": self.buffer.act[: self.buffer.size],
                "buffer.rew": self.buffer.rew[: self.buffer.size],
                "buffer.next_obs": self.buffer.next_obs[: self.buffer.size],
                "buffer.done": self.buffer.done[: self.buffer.size],
            }
        ckpt.save_container(directory / "trainer_state.bin", {
            "buffer_ptr": self.buffer.ptr,
            "buffer_size": self.buffer.size,
            "include_buffer": include_buffer,
            "episodes_buffered": self.episodes_buffered,
            "rng_env": _rng_state(self.env.rng),
            "rng_policy": _rng_state(self.strategy.rng),
            "rng_sample": _rng_state(self.rng_sample),
        }, state_arrays)

        manifest = {
            "schema_version": CHECKPOINT_SCHEMA,
            "strategy": self.strategy_name,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "phase": self.phase,
            "ep_in_phase": self.ep_in_phase,
            "episode": self.total_episodes,
            "schedule": self.schedule.to_dict(),
            "reward_mode": self.reward_mode,
            "reward_scale": self.reward_scale,
            "normalizers": {"queue": self.norms.queue, "arrival": self.norms.arrival},
            "agents": [a.name for a in self.agents],
            "files": files + ["trainer_state.bin"],
        }
        with open(directory / "manifest.json", "w") as f:
            json.dump(manifest, f, sort_keys=True, indent=1)
        return directory

    def load_checkpoint(self, directory):
        """Restore parameters, optimizer, buffer and rng streams in place."""
        directory = Path(directory)
        with open(directory / "manifest.json") as f:
            manifest = json.load(f)
        if manifest["schema_version"] != CHECKPOINT_SCHEMA:
            raise ConfigError("unsupported checkpoint schema")
        if manifest["strategy"] != self.strategy_name:
            raise ConfigError(
                f"checkpoint is for {manifest['strategy']!r}, trainer runs {self.strategy_name!r}"
            )
        for agent in self.agents:
            meta, arrays = ckpt.load_container(directory / f"agent_{agent.name}.bin")
            for tag, net in (("actor", agent.actor), ("critic", agent.critic),
                             ("actor_target", agent.actor_target),
                             ("critic_target", agent.critic_target)):
                for k in net.params:
                    net.params[k][:] = arrays[f"{tag}.{k}"]
            for tag, opt, step_key in (("actor_opt", agent.actor_opt, "actor_opt_step"),
                                       ("critic_opt", agent.critic_opt, "critic_opt_step")):
                opt.step = meta[step_key]
                for k in opt.m:
                    opt.m[k][:] = arrays[f"{tag}.m.{k}"]
                    opt.v[k][:] = arrays[f"{tag}.v.{k}"]
        meta, arrays = ckpt.load_container(directory / "trainer_state.bin")
        if meta["include_buffer"]:
            n = meta["buffer_size"]
            self.buffer.obs[:n] = arrays["buffer.obs"]
            self.buffer.act[:n] = arrays["buffer.act"]
            self.buffer.rew[:n] = arrays["buffer.rew"]
            self.buffer.next_obs[:n] = arrays["buffer.next_obs"]
            self.buffer.done[:n] = arrays["buffer.done"]
        self.buffer.ptr = meta["buffer_ptr"]
        self.buffer.size = meta["buffer_size"]
        self.episodes_buffered = meta["episodes_buffered"]
        self.env.rng = _restore_rng(meta["rng_env"])
        self.strategy.rng = _restore_rng(meta["rng_policy"])
        self.rng_sample = _restore_rng(meta["rng_sample"])
        self.phase = manifest["phase"]
        self.ep_in_phase = manifest["ep_in_phase"]
        return manifest


class _TraceWriter:
    """CSV trace with one row per episode; columns fixed by the agent roster."""

    def __init__(self, path: Path, trainer: MaddpgTrainer):
        path.parent.mkdir(parents=True, exist_ok=True)
        self.columns = ["episode", "phase", "eps", "reward_sum", "reward_mean"]
        for agent in trainer.agents:
            self.columns.append(f"critic_loss_{agent.name}")
            self.columns.append(f"actor_obj_{agent.name}")
        self.fh = open(path, "w", newline="")
        self.fh.write(",".join(self.columns) + "\n")

    def write(self, row: dict):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(float(v))
            return str(v)

        self.fh.write(",".join(fmt(row.get(c)) for c in self.columns) + "\n")

    def close(self):
        self.fh.close()


def load_actor_params(directory) -> tuple[dict, dict]:
    """Actor Mlps (inference only) and the manifest from a checkpoint dir."""
    directory = Path(directory)
    with open(directory / "manifest.json") as f:
        manifest = json.load(f)
    params = {}
    for name in manifest["agents"]:
        meta, arrays = ckpt.load_container(directory / f"agent_{name}.bin")
        actor_params = {k.split(".", 1)[1]: v for k, v in arrays.items()
                        if k.startswith("actor.")}
        params[name] = Mlp(meta["obs_dim"], meta["act_dim"], actor_params, "logistic")
    return params, manifest
