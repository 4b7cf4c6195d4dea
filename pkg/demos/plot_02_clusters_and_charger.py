"""
Clustering and the mobile charger
=================================

Greedy inclusion-circle clustering of a random field, then the charger
path that brings every head to its target from the best starting head.
"""

import numpy as np

from pivotcharge import (ChargerConfig, PropagationParams, Scenario, Targets, cluster_nodes,
                         optimize_start)

sc = Scenario.generate(100, 100.0, seed=1)
cs = cluster_nodes(sc, 10.0)
print(f"{sc.n} nodes -> {len(cs)} clusters")
for c, k in list(zip(cs.clusters, cs.counts))[:5]:
    print(f"  head {c.head:3d} covers {k:2d} nodes: members {list(c.members)}")

# %%
# Stage 1 from every head location; the fastest start wins.
cfg = ChargerConfig()
search = optimize_start(sc, cs, cfg, PropagationParams(), Targets(head=4.0))
r = search.result
print(f"best start: head {search.best_head} at {np.round(search.best_start, 2)}")
print(f"charging time {r.t_cm:.2f} s over {r.steps} steps, speed {cfg.speed} m/s")

# %%
# Trajectory rows are (t, x, y, bearing, action). Count moves and stays.
kinds = r.trajectory[:, 4]
print("move steps", int(np.sum(kinds == 1)), "stay runs", int(np.sum(kinds == 0)))

# %%
# Because power falls off slowly, members collect a lot of leakage on the way.
members = np.setdiff1d(np.arange(sc.n), cs.heads)
print(f"members at >= 2 J after stage 1: {np.sum(r.energy[members] >= 2.0)}/{len(members)}")
