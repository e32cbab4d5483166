"""Sweep the control parameter V on the one-user network.

Averages the last half of each run over a few seeds and prints the service
rates of the SU and the PU next to the power-price bound B/V.
"""

import numpy as np

from cogsched.scenarios import single_su_v
from cogsched.sim import run_scenario

SEEDS, SLOTS = 3, 600
print(f"{'V':>5} {'r_o':>8} {'r_p':>7} {'r_pu':>8} {'B/V':>10}")
for v in (50.0, 100.0, 200.0, 380.0):
    rows, bounds = [], []
    for seed in range(SEEDS):
        res = run_scenario(single_su_v(v=v, rng_seed=seed, slot_count=SLOTS))
        c = res.converged_averages()
        rows.append([c["R_o"][0], c["R_p"][0], c["R_pu"][0]])
        bounds.append(res.summary()["bound"]["B_over_V"])
    r_o, r_p, r_pu = np.mean(rows, axis=0)
    print(f"{v:5.0f} {r_o:8.2f} {r_p:7.2f} {r_pu:8.2f} {np.mean(bounds):10.4g}")
