"""Compare scheduling with the true PU backlog against the estimated one.

The estimate assumes a busy PU receives its mean arrivals plus a slack iota
and resets when the PU is seen idle. Larger slack makes the scheduler more
protective of the PU.
"""

import numpy as np

from cogsched.cli import paired_runs
from cogsched.scenarios import single_su_v

for iota in (0.0, 0.01, 0.1, 1.0):
    true_q, est_q = paired_runs(single_su_v(iota=iota, slot_count=600))
    su = lambda r: (r.series["R_o"] + r.series["R_p"]).sum(axis=1)
    idle = est_q.series["Q_pu"][:, 0] == 0
    d_su = (su(true_q) - su(est_q))[300:].mean()
    d_pu = (true_q.series["R_pu"] - est_q.series["R_pu"])[300:].mean()
    print(f"iota {iota:5.2f}: SU sum-rate diff {d_su:+.4f}  PU rate diff {d_pu:+.5f}  "
          f"idle slots {idle.mean():.1%}, estimate at idle = {np.abs(est_q.series['Qhat'][idle]).max()}")
