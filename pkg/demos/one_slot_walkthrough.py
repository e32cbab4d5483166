"""Walk through a single scheduling decision on the eight-user network.

Runs a few warm-up slots so the queues are non-empty, then prints what the
base station sees and decides in the next slot.
"""

import numpy as np

from cogsched.resource_alloc import urgency_weights
from cogsched.scenarios import multi_su
from cogsched.sim import SimState, run_slot

cfg = multi_su(rng_seed=1)
state = SimState.initial(cfg)
for _ in range(20):
    state, _ = run_slot(state, cfg)

q = state.queues
w_o, w_p = urgency_weights(q, cfg)
print("slot", state.slot)
print("open backlog    ", np.round(q.Q_o, 1))
print("private backlog ", np.round(q.Q_p, 1))
print("open urgency    ", np.round(w_o, 2))
print("private urgency ", np.round(w_p, 2))
print("power price Y   ", round(q.Y, 3))

state, m = run_slot(state, cfg)
ch, alloc = m.channel, m.allocation
print()
print("PU-occupied subcarriers:", int(ch.occupied.sum()), "of", ch.num_subcarriers)
print("secrecy flags (1 = send private data):", alloc.zeta.tolist())
print("subcarriers per SU:", alloc.w.sum(axis=1).tolist())
print("power per SU [W]:  ", np.round(alloc.p.sum(axis=1), 3).tolist())
print(f"total power {alloc.E:.4f} W, multiplier {alloc.delta:.3g}, {alloc.iterations} dual steps")
print("open rates   ", np.round(m.rates.R_o, 2).tolist())
print("private rates", np.round(m.rates.R_p, 2).tolist())
print("PU rate      ", np.round(m.rates.R_pu, 2).tolist())
