"""The deterministic policies, each on a state small enough to eyeball.

LELF fills a link with the most urgent packets first; the min-weight router
measures congestion as queued-packets x remaining-hops and fills paths by
increasing weight up to their bottlenecks; the virtual-queue router steers
around edges with standing backlog; FIFO just serves in arrival order.
"""

import numpy as np

from ttlroute.env import NetworkEnv, Problem
from ttlroute.network import Commodity, Topology
from ttlroute.rules import UmwRouter, edge_weights, lelf_schedule, mwr_route

# -- LELF: urgency order, capacity 3 ------------------------------------------
els = np.array([3, 1, 2, 1])
counts = np.array([2, 1, 2, 2])
print("LELF over entries (EL, queued):", list(zip(els.tolist(), counts.tolist())))
print("  forwarded with capacity 3:", lelf_schedule(els, counts, 3).tolist())
print("  -> both EL-1 entries drain first, then one EL-2 packet\n")

# -- min-weight router --------------------------------------------------------
topo = Topology(["s", "m", "t", "d"],
                [("s", "d", 2), ("s", "m", 10), ("m", "d", 10), ("s", "t", 10), ("t", "m", 10)])
problem = Problem(topo, [Commodity("s", "d", 4, rate=5.0)])
env = NetworkEnv(problem, el_mode=True)
print("paths:", [" -> ".join(p) for p in problem.pathset.paths])
print("empty network, 5 arrivals ->", mwr_route(np.array([5]), env).tolist(),
      " (direct path first, rest spills over its capacity-2 bottleneck)")
g_direct = 0
env.q[g_direct, 0, 3] = 4  # four queued packets on the direct path at s
table = edge_weights(env)
print("after queueing 4 packets on (s,d): edge weight", float(table.weight[problem.edge_index[('s', 'd')]]),
      "-> assignment", mwr_route(np.array([5]), env).tolist(), "\n")

# -- virtual-queue router -------------------------------------------------------
router = UmwRouter(problem)
env.reset()
for slot in range(4):
    arrivals = np.array([6])
    assignment = router.route(arrivals, env)
    print(f"virtual-queue router slot {slot}: assignment {assignment.tolist()} "
          f"virtual backlogs {router.virtual.tolist()}")
print("  -> backlog beyond the per-slot service shifts later slots to other paths")
