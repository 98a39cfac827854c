"""Walk single packets through the slot dynamics.

A slot runs: admit arrivals -> schedulers move/drop packets -> everything ages
one lifetime unit at the boundary (expired and, in EL-mode, hopeless packets
drop out). This script traces those rules on a 4-node line so you can see each
bookkeeping array change.
"""

import numpy as np

from ttlroute.env import NetworkEnv, Problem, zero_action
from ttlroute.network import Commodity, Topology, effective_lifetime

topo = Topology(["a", "b", "c", "d"], [("a", "b", 5), ("b", "c", 5), ("c", "d", 5)])
problem = Problem(topo, [Commodity("a", "d", 4, rate=0.0)])
path = problem.pathset.paths[0]
print("the only feasible path:", " -> ".join(path))
for node in path:
    print(f"  effective lifetime of a fresh packet (l=4) at {node}:",
          effective_lifetime(path, 4, node))

# A packet admitted at the source with full lifetime, forwarded every slot:
env = NetworkEnv(problem, el_mode=True)
env.admit(np.array([1]), np.array([1]))
print("\nslot-by-slot, always forwarding:")
while env.total_queued() or env.t == 0:
    flows, drops = zero_action(problem)
    occupied = np.argwhere(env.q > 0)
    for g, k, l in occupied:
        flows[g, k, l] = env.q[g, k, l]
    deliveries = env.apply_flows(flows, drops)
    env.expire_and_advance()
    print(f"  t={env.t}: queued={env.total_queued()} delivered={int(deliveries.sum())}")

# The same packet held at the source instead: effective lifetime melts away
# while the absolute lifetime is still positive, and EL-mode drops it early.
env.reset()
env.admit(np.array([1]), np.array([1]))
print("\nholding at the source under EL-mode:")
for _ in range(4):
    flows, drops = zero_action(problem)
    env.apply_flows(flows, drops)
    expired, el_expired = env.expire_and_advance()
    l = int(np.argwhere(env.q[0, 0] > 0)[0][0]) if env.total_queued() else None
    print(f"  t={env.t}: lifetime now {l}, el_expired this slot: {int(el_expired.sum())}")
    if not env.total_queued():
        print("  the packet was dropped as hopeless (EL hit 0) with lifetime still > 0")
        break
