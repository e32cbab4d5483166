"""When is it best to transmit alongside the PU all the time?

Checks the per-subcarrier threshold on sampled network channels, then
brute-forces tiny static instances on both sides of the threshold.
"""

import numpy as np

from cogsched.channel import ChannelModelParams, OccupancyPolicy, pu_occupancy, sample_channel
from cogsched.overlay import check_full_overlay, random_static_instance, static_overlay_oracle
from cogsched.scenarios import multi_su

cfg = multi_su()
params, policy = ChannelModelParams.from_config(cfg), OccupancyPolicy.from_config(cfg)
owner, power = pu_occupancy(policy, 0, np.ones(1), cfg.num_subcarriers)
for t in range(3):
    rep = check_full_overlay(sample_channel(params, t, owner=owner, pu_power=power), cfg.p_max)
    print(f"slot {t}: condition holds on {int(rep.subcarrier_holds.sum())} of 64 subcarriers"
          f" (system holds: {rep.system_holds})")

rng = np.random.default_rng(0)
for satisfy in (True, False):
    kappas = [static_overlay_oracle(random_static_instance(rng, satisfy_condition=satisfy)).kappa
              for _ in range(20)]
    label = "below threshold" if satisfy else "above threshold"
    print(f"{label}: best PU activity fraction over 20 draws = {np.round(kappas, 2).tolist()}")
