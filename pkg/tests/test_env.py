import numpy as np
import pytest

from conftest import line3_topology, random_problem, seven_node_problem

from ttlroute.audit import replay_episode, steplog_record
from ttlroute.env import NetworkEnv, Problem, StepViolation, zero_action
from ttlroute.network import Commodity


def line3_problem(lifetime=3):
    return Problem(line3_topology(), [Commodity("a", "c", lifetime, 1.0)])


class ScriptedStrategy:
    """Deterministic or random-but-valid actions for exercising the dynamics."""

    def __init__(self, problem, rng=None, drop_some=True):
        self.problem = problem
        self.rng = rng
        self.drop_some = drop_some
        self.el_mode = False
        self.track_fifo = False

    def reset(self):
        pass

    def route(self, arrivals, env):
        pr = self.problem
        assignment = np.zeros(pr.n_paths, dtype=np.int64)
        for c, idxs in enumerate(pr.pathset.by_commodity):
            idxs = list(idxs)
            if self.rng is None:
                assignment[idxs[0]] = arrivals[c]
            else:
                share = self.rng.multinomial(arrivals[c], np.full(len(idxs), 1 / len(idxs)))
                assignment[idxs] = share
        return assignment

    def schedule(self, env):
        pr = self.problem
        flows, drops = zero_action(pr)
        for e in range(pr.n_edges):
            cap = int(pr.capacities[e])
            ps, ks = pr.edge_slots[e]
            for p, k in zip(ps, ks):
                for l in range(1, int(pr.path_lifetime[p]) + 1):
                    have = int(env.q[p, k, l])
                    if have == 0 or cap == 0:
                        continue
                    if self.rng is None:
                        f = min(have, cap)
                        d = 0
                    else:
                        f = int(self.rng.integers(0, min(have, cap) + 1))
                        d = int(self.rng.integers(0, have - f + 1)) if self.drop_some else 0
                    flows[p, k, l] += f
                    drops[p, k, l] += d
                    cap -= f
        return flows, drops, None


def test_single_packet_forwarded_and_aged():
    pr = line3_problem()
    env = NetworkEnv(pr)
    env.admit(np.array([1]), np.array([1]))          # enters (p0, pos 0, l=3)
    flows, drops = zero_action(pr)
    flows[0, 0, 3] = 1
    deliveries = env.apply_flows(flows, drops)
    assert deliveries.sum() == 0                     # b is not the destination
    env.expire_and_advance()
    assert env.q[0, 1, 2] == 1                       # next slot: at b with l=2
    assert env.q.sum() == 1


def test_single_packet_held_ages_in_place():
    pr = line3_problem()
    env = NetworkEnv(pr)
    env.admit(np.array([1]), np.array([1]))
    flows, drops = zero_action(pr)
    env.apply_flows(flows, drops)
    env.expire_and_advance()
    assert env.q[0, 0, 2] == 1


def test_final_hop_delivery_counts_lifetime_one():
    pr = line3_problem()
    env = NetworkEnv(pr)
    env.q[0, 1, 1] = 1                               # at b with one slot left
    flows, drops = zero_action(pr)
    flows[0, 1, 1] = 1
    deliveries = env.apply_flows(flows, drops)
    assert deliveries[0, 1] == 1
    assert env.q.sum() == 0                          # destination queue stays 0
    expired, _ = env.expire_and_advance()
    assert expired.sum() == 0


def test_held_packet_at_lifetime_one_expires():
    pr = line3_problem()
    env = NetworkEnv(pr)
    env.q[0, 0, 1] = 1
    expired, el_expired = env.expire_and_advance()
    assert expired[0, 0] == 1
    assert env.q.sum() == 0
    assert el_expired.sum() == 0


def test_el_mode_drops_hopeless_packets_early():
    # Packet on a 3-hop path with EL=1 that waits one slot: lifetime stays
    # positive but EL hits 0, so EL-mode removes it and plain mode keeps it.
    from ttlroute.network import Topology
    topo = Topology(["w", "x", "y", "z"], [("w", "x", 5), ("x", "y", 5), ("y", "z", 5)])
    pr = Problem(topo, [Commodity("w", "z", 4, 1.0)])
    for el_mode, expect_left in ((True, 0), (False, 1)):
        env = NetworkEnv(pr, el_mode=el_mode)
        env.q[0, 0, 3] = 1                           # dist 3 -> EL = 1
        expired, el_expired = env.expire_and_advance()
        assert expired.sum() == 0
        assert int(el_expired.sum()) == (1 - expect_left)
        assert env.q.sum() == expect_left
        if el_mode:
            assert el_expired[0, 0, 2] == 1          # recorded at post-shift l


def test_admit_contract_checks():
    pr = line3_problem()
    env = NetworkEnv(pr)
    with pytest.raises(StepViolation, match="assignment sums"):
        env.admit(np.array([2]), np.array([1]))
    with pytest.raises(StepViolation, match="negative"):
        env.admit(np.array([0]), np.array([-1]))


def test_admit_zero_is_identity():
    pr = line3_problem()
    env = NetworkEnv(pr)
    before = env.q.copy()
    env.admit(np.array([0]), np.array([0]))
    assert (env.q == before).all()


def test_availability_violation_diagnostic():
    pr = line3_problem()
    env = NetworkEnv(pr)
    flows, drops = zero_action(pr)
    flows[0, 0, 3] = 1
    with pytest.raises(StepViolation, match="availability"):
        env.apply_flows(flows, drops)


def test_capacity_violation_diagnostic():
    topo_pr = Problem(line3_topology(), [Commodity("a", "c", 3, 1.0)])
    env = NetworkEnv(topo_pr)
    env.q[0, 0, 3] = 20
    flows, drops = zero_action(topo_pr)
    flows[0, 0, 3] = 11                               # capacity is 10
    with pytest.raises(StepViolation, match="capacity"):
        env.apply_flows(flows, drops)


def test_flow_on_invalid_lifetime_rejected():
    pr = line3_problem()
    env = NetworkEnv(pr)
    flows, drops = zero_action(pr)
    flows[0, 0, 0] = 1
    with pytest.raises(StepViolation, match="invalid index"):
        env.apply_flows(flows, drops)


def test_congestion_examples():
    pr = seven_node_problem(lifetime=3)
    env = NetworkEnv(pr)
    assert env.congestion(node="w") == 0
    # 3 packets at w on a path through (w, u), 2 through (w, v) -> Q_w=5
    g1 = next(g for g, p in enumerate(pr.pathset.paths) if p == ("s1", "w", "u", "d1"))
    g2 = next(g for g, p in enumerate(pr.pathset.paths) if p == ("s2", "w", "v", "d2"))
    k1 = int(pr.path_edge_pos[g1, pr.edge_index[("w", "u")]])
    k2 = int(pr.path_edge_pos[g2, pr.edge_index[("w", "v")]])
    env.q[g1, k1, 2] = 3
    env.q[g2, k2, 1] = 2
    assert env.congestion(node="w") == 5
    assert env.congestion(edge=("w", "u")) == 3
    assert env.congestion(edge=("w", "v")) == 2
    with pytest.raises(ValueError):
        env.congestion()


def test_node_congestion_is_sum_of_interface_congestion(rng):
    # Q_i = sum_j Q_ij on random states (every queued packet has a next hop).
    for _ in range(25):
        pr = random_problem(rng, n_commodities=2)
        env = NetworkEnv(pr)
        mask = pr.life_valid
        env.q[mask] = rng.integers(0, 4, size=int(mask.sum()))
        for node in pr.node_ids:
            q_i = env.congestion(node=node)
            q_ij = sum(env.congestion(edge=e) for e in pr.edge_ids if e[0] == node)
            assert q_i == q_ij
        vec = env.node_congestion_vector()
        assert vec.sum() == env.q.sum()


def test_sample_arrivals_degenerate_and_independent():
    pr = Problem(seven_node_problem().topology,
                 [Commodity("s1", "d1", 3, 0.0), Commodity("s2", "d2", 3, 3.0)])
    env = NetworkEnv(pr, rng=np.random.default_rng(7))
    draws = np.array([env.sample_arrivals() for _ in range(200)])
    assert (draws[:, 0] == 0).all()                  # zero-rate commodity
    assert draws[:, 1].max() > 0


def test_sample_arrivals_law_of_large_numbers():
    pr = Problem(line3_topology(), [Commodity("a", "c", 3, 3.0)])
    env = NetworkEnv(pr, rng=np.random.default_rng(1234))
    n = 100_000
    total = sum(int(env.sample_arrivals()[0]) for _ in range(n))
    assert abs(total / n - 3.0) < 0.05


def test_equal_rate_commodities_draw_independently():
    pr = Problem(seven_node_problem().topology,
                 [Commodity("s1", "d1", 3, 5.0), Commodity("s2", "d2", 3, 5.0)])
    env = NetworkEnv(pr, rng=np.random.default_rng(99))
    draws = np.array([env.sample_arrivals() for _ in range(500)])
    assert (draws[:, 0] != draws[:, 1]).any()


def test_zero_arrivals_empty_network_step_is_noop():
    pr = Problem(line3_topology(), [Commodity("a", "c", 3, 0.0)])
    env = NetworkEnv(pr)
    log = env.step(ScriptedStrategy(pr))
    assert log.arrivals.sum() == 0
    assert log.flows.sum() == 0 and log.drops.sum() == 0
    assert log.deliveries.sum() == 0
    assert env.t == 1


def test_one_packet_traced_end_to_end():
    pr = Problem(line3_topology(), [Commodity("a", "c", 2, 0.0)])
    env = NetworkEnv(pr)
    strat = ScriptedStrategy(pr)
    env.admit(np.array([1]), np.array([1]))          # manual arrival at l=2
    flows, drops, _ = strat.schedule(env)
    env.apply_flows(flows, drops)
    env.expire_and_advance()
    assert env.q[0, 1, 1] == 1
    flows, drops, _ = strat.schedule(env)
    deliveries = env.apply_flows(flows, drops)
    assert deliveries[0, 1] == 1
    env.expire_and_advance()
    assert env.q.sum() == 0


def test_random_episode_conservation_via_replay_oracle(rng):
    for _ in range(10):
        pr = random_problem(rng, n_commodities=2)
        env = NetworkEnv(pr, rng=np.random.default_rng(int(rng.integers(1 << 30))))
        strat = ScriptedStrategy(pr, rng=np.random.default_rng(int(rng.integers(1 << 30))))
        records = [steplog_record(env.step(strat)) for _ in range(20)]
        result = replay_episode(pr, el_mode=False, records=records)
        assert result["violations"] == []
        assert result["leftover"] == env.total_queued()
        assert result["arrived"] == (
            result["delivered"] + result["proactive_drops"]
            + result["expired"] + result["el_expired"] + result["leftover"]
        )


def test_replay_oracle_catches_forged_logs(rng):
    pr = random_problem(rng, n_commodities=1)
    env = NetworkEnv(pr, rng=np.random.default_rng(5))
    strat = ScriptedStrategy(pr, rng=np.random.default_rng(6))
    records = [steplog_record(env.step(strat)) for _ in range(10)]
    # forge a delivery out of thin air
    records[5]["deliveries"] = [[0, 1, 99]]
    assert replay_episode(pr, el_mode=False, records=records)["violations"]


def test_identical_seed_gives_bit_identical_steplogs():
    pr = seven_node_problem(lifetime=3, rate=4.0)

    def run():
        env = NetworkEnv(pr, rng=np.random.default_rng(777))
        strat = ScriptedStrategy(pr, rng=np.random.default_rng(888))
        return [steplog_record(env.step(strat)) for _ in range(30)]

    assert run() == run()


def test_reset_clears_queues_and_clock():
    pr = line3_problem()
    env = NetworkEnv(pr, rng=np.random.default_rng(3))
    env.admit(np.array([2]), np.array([2]))
    env.expire_and_advance()
    env.reset()
    assert env.q.sum() == 0 and env.t == 0
