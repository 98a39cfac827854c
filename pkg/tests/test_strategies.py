import numpy as np
import pytest

from conftest import seven_node_problem, tiny3_problem

from ttlroute.agents import ALL_STRATEGIES, MARL_STRATEGIES
from ttlroute.audit import replay_episode, steplog_record
from ttlroute.env import NetworkEnv
from ttlroute.strategies import (
    agent_specs,
    init_actor_params,
    make_strategy,
    strategy_flags,
)


def test_strategy_flags():
    assert strategy_flags("marl_lt_dsk") == {"el_mode": False, "track_fifo": False}
    assert strategy_flags("marl_el_smax") == {"el_mode": True, "track_fifo": False}
    assert strategy_flags("umw_fifo") == {"el_mode": False, "track_fifo": True}
    with pytest.raises(ValueError):
        strategy_flags("nope")


def test_agent_specs_rosters():
    pr = seven_node_problem(lifetime=3)
    assert agent_specs("mwr_el_lelf", pr) == []
    assert agent_specs("umw_fifo", pr) == []
    lelf = agent_specs("marl_el_lelf", pr)
    assert [s.name for s in lelf] == ["router"]   # schedulers are rule-based
    dsk = agent_specs("marl_lt_dsk", pr)
    assert len(dsk) == 1 + pr.n_edges
    assert dsk[0].name == "router"
    assert dsk[0].obs_dim == pr.n_commodities + pr.n_nodes
    assert dsk[0].act_dim == pr.n_paths
    for spec in dsk[1:]:
        assert spec.act_dim == 3 * spec.obs_dim


def test_marl_strategy_requires_params():
    pr = tiny3_problem()
    with pytest.raises(ValueError, match="actor parameters"):
        make_strategy("marl_el_sk", pr)
    with pytest.raises(ValueError, match="missing actor params"):
        make_strategy("marl_el_sk", pr,
                      actor_params={"router": init_actor_params(
                          "marl_el_lelf", pr, np.random.default_rng(0))["router"]})


@pytest.mark.parametrize("name", ALL_STRATEGIES)
def test_every_strategy_runs_clean_episodes(name):
    pr = seven_node_problem(lifetime=3, rate=9.0)
    flags = strategy_flags(name)
    params = init_actor_params(name, pr, np.random.default_rng(4)) \
        if name in MARL_STRATEGIES else None
    env = NetworkEnv(pr, rng=np.random.default_rng(5), **flags)
    strat = make_strategy(name, pr, actor_params=params, rng=np.random.default_rng(6))
    for _ in range(3):
        env.reset()
        strat.reset()
        records = [steplog_record(env.step(strat)) for _ in range(30)]
        assert replay_episode(pr, flags["el_mode"], records)["violations"] == []


@pytest.mark.parametrize("name", MARL_STRATEGIES)
def test_full_exploration_actions_stay_valid(name):
    pr = tiny3_problem()
    flags = strategy_flags(name)
    params = init_actor_params(name, pr, np.random.default_rng(1))
    env = NetworkEnv(pr, rng=np.random.default_rng(2), **flags)
    strat = make_strategy(name, pr, actor_params=params,
                          rng=np.random.default_rng(3), eps=1.0)
    records = [steplog_record(env.step(strat)) for _ in range(40)]
    assert replay_episode(pr, flags["el_mode"], records)["violations"] == []


def test_marl_rollout_bit_identical_under_seed():
    pr = seven_node_problem(lifetime=3, rate=6.0)

    def run():
        params = init_actor_params("marl_el_smax", pr, np.random.default_rng(10))
        env = NetworkEnv(pr, el_mode=True, rng=np.random.default_rng(11))
        strat = make_strategy("marl_el_smax", pr, actor_params=params,
                              rng=np.random.default_rng(12), eps=0.3)
        return [steplog_record(env.step(strat)) for _ in range(25)]

    assert run() == run()


def test_capture_records_obs_and_raw_per_step():
    pr = tiny3_problem()
    params = init_actor_params("marl_lt_sk", pr, np.random.default_rng(0))
    env = NetworkEnv(pr, rng=np.random.default_rng(1))
    strat = make_strategy("marl_lt_sk", pr, actor_params=params,
                          rng=np.random.default_rng(2))
    strat.capture = []
    for _ in range(5):
        env.step(strat)
    assert len(strat.capture) == 5
    specs = agent_specs("marl_lt_sk", pr)
    for entry in strat.capture:
        assert len(entry["obs"]) == len(specs)
        assert len(entry["raw"]) == len(specs)
        for spec, obs, raw in zip(specs, entry["obs"], entry["raw"]):
            assert obs.shape == (spec.obs_dim,)
            assert raw.shape == (spec.act_dim,)
            assert ((raw >= 0) & (raw <= 1)).all()
