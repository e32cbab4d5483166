"""Run the eight-user network and report the hard buffer limits and averages.

Pass a slot count as the first argument to shorten the run (default 4500).
"""

import sys

import numpy as np

from cogsched.scenarios import multi_su
from cogsched.sim import run_scenario, trend_test

slots = int(sys.argv[1]) if len(sys.argv) > 1 else 4500
cfg = multi_su()
res = run_scenario(cfg, slot_count=slots,
                   progress=lambda t: print(f"  slot {t}", flush=True) if t % 500 == 0 else None)
s = res.series
print(f"violations: {len(res.violations)}")
print(f"max open backlog    {s['Q_o'].max():8.2f}  (cap {cfg.q_max_o})")
print(f"max private backlog {s['Q_p'].max():8.2f}  (cap {cfg.q_max_p})")
print(f"max slot power      {s['E'].max():8.4f}  (peak {cfg.p_max})")

c = res.converged_averages()
print()
print("last-half averages per SU")
print("  admitted open ", np.round(c["T_o"], 2).tolist())
print("  served open   ", np.round(c["R_o"], 2).tolist())
print("  admitted priv ", np.round(c["T_p"], 2).tolist())
print("  served priv   ", np.round(c["R_p"], 2).tolist())
print("  delay [slots] ", np.round(c["delay_o"], 2).tolist())
print(f"  mean power {float(c['E']):.4f} W (target {cfg.p_avg})")

print()
for name in ("Y", "Z", "X_o", "X_p", "Q_pu"):
    arr = s[name].reshape(len(s[name]), -1)
    worst = max((trend_test(arr[:, i]) for i in range(arr.shape[1])), key=lambda r: r.slope - r.upper)
    print(f"trend {name:5s} slope {worst.slope:+.4g}  allowance {worst.upper:.3g}  ok={worst.ok}")
